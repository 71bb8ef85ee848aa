//! Feature-model source text: syntax tree, parser and pretty-printer.

mod ast;
mod parser;
mod printer;

pub use ast::*;
pub use parser::{is_keyword, parse_expression, parse_model, SyntaxError};
