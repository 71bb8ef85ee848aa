//! Feature modeling toolkit: a parser for a textual feature-model language,
//! lowering of models to finite-domain constraint problems, a solver, and
//! product-line analyses built on top.
//!
//! ```
//! use fml_core::Analyzer;
//!
//! let analyzer = Analyzer::from_source("FM = Car : all [Engine, Radio (0..1)];").unwrap();
//! assert_eq!(analyzer.count_products(), 2);
//! ```

pub mod analysis;
pub mod compile;
pub mod model;
pub mod solver;
pub mod synth;
pub mod syntax;

pub use analysis::{AnalysisError, Analyzer, ConfigurationQuery, LoadError, Product, Verdict};
pub use compile::compile;
pub use model::{resolve, typecheck, ResolveError, ResolvedModel, TypeError};
pub use solver::{CspProblem, Search, Value};
pub use syntax::{parse_model, FeatureModelAst, SourceSpan, SyntaxError};
