//! Product-line analyses over a compiled model: satisfiability, product
//! enumeration, configuration checking, dead and core features.

use std::ops::ControlFlow;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::compile::compile;
use crate::model::{resolve, ResolveError, ResolvedModel, TypeError};
use crate::solver::{Assignment, CspProblem, Domain, Provenance, Search, Solver, Value};
use crate::syntax::{parse_model, SourceSpan, SyntaxError};

/// Requested clone counts for some features; 0 means explicitly deselected.
pub type ConfigurationQuery = IndexMap<String, u64>;

/// One valid configuration. Keys follow model declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Product {
    pub features: IndexMap<String, u64>,
    pub attributes: IndexMap<String, Value>,
}

impl Product {
    pub fn count(&self, feature: &str) -> Option<u64> {
        self.features.get(feature).copied()
    }

    pub fn is_selected(&self, feature: &str) -> bool {
        self.count(feature).is_some_and(|c| c > 0)
    }

    /// The product as a full configuration query.
    pub fn to_query(&self) -> ConfigurationQuery {
        self.features.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// No product extends the query; carries at least one constraint that
    /// rules it out.
    Invalid(Vec<Provenance>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("count {count} is outside the domain {domain} of feature `{feature}`")]
    CountOutOfDomain {
        feature: String,
        count: u64,
        domain: Domain,
    },
    #[error("the model has no products")]
    VoidModel,
}

/// Any failure on the way from source text to an [`Analyzer`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl LoadError {
    pub fn span(&self) -> SourceSpan {
        match self {
            LoadError::Syntax(e) => e.span,
            LoadError::Resolve(e) => e.span(),
            LoadError::Type(e) => e.span,
        }
    }
}

/// A resolved model together with its compiled CSP.
#[derive(Debug, Clone)]
pub struct Analyzer {
    model: ResolvedModel,
    problem: CspProblem,
    search: Search,
    // Per CSP variable: is it a feature count (as opposed to an attribute)?
    is_feature: Vec<bool>,
}

impl Analyzer {
    pub fn new(model: ResolvedModel) -> Result<Self, TypeError> {
        let problem = compile(&model)?;
        let is_feature = problem
            .variables()
            .iter()
            .map(|v| model.lookup(v.as_str()).is_some())
            .collect();
        Ok(Analyzer {
            model,
            problem,
            search: Search::default(),
            is_feature,
        })
    }

    /// Parses, resolves and compiles `source`.
    pub fn from_source(source: &str) -> Result<Self, LoadError> {
        let model = resolve(parse_model(source)?)?;
        Ok(Analyzer::new(model)?)
    }

    pub fn with_search(mut self, search: Search) -> Self {
        self.search = search;
        self
    }

    pub fn model(&self) -> &ResolvedModel {
        &self.model
    }

    pub fn problem(&self) -> &CspProblem {
        &self.problem
    }

    fn solver<'a>(&self, problem: &'a CspProblem) -> Solver<'a> {
        Solver::new(problem).with_search(self.search)
    }

    fn product(&self, a: &Assignment) -> Product {
        let mut features = IndexMap::new();
        let mut attributes = IndexMap::new();
        for ((var, value), &is_feature) in a.iter().zip(&self.is_feature) {
            if is_feature {
                let count = value.as_int().and_then(|c| u64::try_from(c).ok());
                features.insert(var.to_string(), count.expect("feature domains hold counts"));
            } else {
                attributes.insert(var.to_string(), value.clone());
            }
        }
        Product { features, attributes }
    }

    /// True iff the model has at least one product.
    pub fn valid_model(&self) -> bool {
        self.solver(&self.problem).solve_first().is_some()
    }

    /// Streams products in enumeration order until `f` returns `Break`.
    pub fn for_each_product(&self, mut f: impl FnMut(Product) -> ControlFlow<()>) {
        self.solver(&self.problem).for_each_solution(|a| f(self.product(a)));
    }

    pub fn enumerate_products(&self, limit: Option<usize>) -> Vec<Product> {
        let mut out = Vec::new();
        if limit == Some(0) {
            return out;
        }
        self.for_each_product(|p| {
            out.push(p);
            if Some(out.len()) == limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        out
    }

    pub fn count_products(&self) -> u64 {
        self.solver(&self.problem).count_solutions()
    }

    /// Checks whether some product agrees with every count in `query`.
    pub fn check_configuration(&self, query: &ConfigurationQuery) -> Result<Verdict, AnalysisError> {
        let mut restricted = self.problem.clone();
        for (name, &count) in query {
            if self.model.lookup(name).is_none() {
                return Err(AnalysisError::UnknownFeature(name.clone()));
            }
            let idx = self.problem.index_of(name).expect("features are variables");
            let domain = self.problem.domain(idx);
            let value = i64::try_from(count).map(Value::Int).ok();
            if !value.as_ref().is_some_and(|v| domain.contains(v)) {
                return Err(AnalysisError::CountOutOfDomain {
                    feature: name.clone(),
                    count,
                    domain: domain.clone(),
                });
            }
            restricted = restricted
                .with_domain(name, Domain::singleton(value.unwrap()))
                .expect("known variable");
        }

        let mut solver = self.solver(&restricted);
        if solver.solve_first().is_some() {
            return Ok(Verdict::Valid);
        }
        let mut witnesses = locally_infeasible(&restricted);
        if witnesses.is_empty() {
            witnesses = solver.conflicts().to_vec();
        }
        Ok(Verdict::Invalid(
            witnesses
                .into_iter()
                .map(|c| restricted.constraints()[c].provenance.clone())
                .collect(),
        ))
    }

    /// Features selected in no product, in declaration order.
    pub fn dead_features(&self) -> Result<Vec<String>, AnalysisError> {
        let (_, dead) = self.core_and_dead()?;
        Ok(dead)
    }

    /// Features selected in every product, in declaration order.
    pub fn core_features(&self) -> Result<Vec<String>, AnalysisError> {
        let (core, _) = self.core_and_dead()?;
        Ok(core)
    }

    /// One restricted satisfiability check per feature and polarity, skipping
    /// the ones already settled by a product found earlier.
    pub fn core_and_dead(&self) -> Result<(Vec<String>, Vec<String>), AnalysisError> {
        let features = self.model.features();
        let mut seen_on = vec![false; features.len()];
        let mut seen_off = vec![false; features.len()];
        let record = |p: &Product, on: &mut [bool], off: &mut [bool]| {
            for (i, f) in features.iter().enumerate() {
                if p.is_selected(&f.name) {
                    on[i] = true;
                } else {
                    off[i] = true;
                }
            }
        };

        let first = self.solver(&self.problem).solve_first().ok_or(AnalysisError::VoidModel)?;
        record(&self.product(&first), &mut seen_on, &mut seen_off);

        let mut core = Vec::new();
        let mut dead = Vec::new();
        for (i, f) in features.iter().enumerate() {
            let idx = self.problem.index_of(&f.name).expect("features are variables");
            let domain = self.problem.domain(idx);
            for selected in [true, false] {
                if (selected && seen_on[i]) || (!selected && seen_off[i]) {
                    continue;
                }
                let values = domain.iter().filter(|v| (v.as_int() > Some(0)) == selected).cloned();
                let found = Domain::new(values).ok().and_then(|d| {
                    let restricted = self.problem.with_domain(&f.name, d).expect("known variable");
                    self.solver(&restricted).solve_first()
                });
                match found {
                    Some(a) => record(&self.product(&a), &mut seen_on, &mut seen_off),
                    None if selected => dead.push(f.name.clone()),
                    None => core.push(f.name.clone()),
                }
            }
        }
        Ok((core, dead))
    }
}

/// Constraints with no satisfying tuple in the cross product of the current
/// domains. Constraints with oversized scopes are skipped.
fn locally_infeasible(problem: &CspProblem) -> Vec<usize> {
    const LIMIT: usize = 1 << 16;
    let mut out = Vec::new();
    'constraints: for (ci, c) in problem.constraints().iter().enumerate() {
        let domains: Vec<&Domain> = c
            .scope
            .iter()
            .map(|v| problem.domain(problem.index_of(v.as_str()).expect("declared")))
            .collect();
        let size = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        if !size.is_some_and(|s| s <= LIMIT) {
            continue;
        }
        let mut odometer = vec![0usize; domains.len()];
        loop {
            let tuple: Vec<Value> = odometer.iter().zip(&domains).map(|(&i, d)| d.values()[i].clone()).collect();
            if c.holds(&tuple) {
                continue 'constraints;
            }
            // Advance the last position first.
            let mut k = odometer.len();
            loop {
                if k == 0 {
                    out.push(ci);
                    continue 'constraints;
                }
                k -= 1;
                odometer[k] += 1;
                if odometer[k] < domains[k].len() {
                    break;
                }
                odometer[k] = 0;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use itertools::Itertools;
    use proptest::prelude::*;

    use super::*;

    const MOBILE: &str = include_str!("../tests/fixtures/mobile.fml");
    const INTERNET: &str = include_str!("../tests/fixtures/internet.fml");
    const LAPTOP: &str = include_str!("../tests/fixtures/laptop.fml");

    fn load(src: &str) -> Analyzer {
        Analyzer::from_source(src).unwrap()
    }

    fn query(pairs: &[(&str, u64)]) -> ConfigurationQuery {
        pairs.iter().map(|&(n, c)| (n.to_string(), c)).collect()
    }

    /// Brute-force product space of the mobile model: every 0/1 tuple over its
    /// ten features, filtered by the group semantics and the three written
    /// constraints, stated here independently of the compiler.
    fn mobile_oracle(extra_not_gps: bool) -> BTreeSet<Vec<u64>> {
        let names = ["MobilePhone", "Calls", "GPS", "Screen", "Basic", "Color", "HighResolution", "Media", "Camera", "MP3"];
        (0..names.len())
            .map(|_| 0..=1u64)
            .multi_cartesian_product()
            .filter(|t| {
                let on = |n: &str| t[names.iter().position(|x| *x == n).unwrap()] > 0;
                let implies = |a: bool, b: bool| !a || b;
                let parent_ok = [
                    ("Calls", "MobilePhone"),
                    ("GPS", "MobilePhone"),
                    ("Screen", "MobilePhone"),
                    ("Media", "MobilePhone"),
                    ("Basic", "Screen"),
                    ("Color", "Screen"),
                    ("HighResolution", "Screen"),
                    ("Camera", "Media"),
                    ("MP3", "Media"),
                ]
                .iter()
                .all(|&(c, p)| implies(on(c), on(p)));
                let screens = ["Basic", "Color", "HighResolution"].iter().filter(|s| on(s)).count();
                on("MobilePhone")
                    && parent_ok
                    && implies(on("MobilePhone"), on("Calls") && on("Media"))
                    && implies(on("Screen"), screens == 1)
                    && implies(on("Media"), on("Camera") || on("MP3"))
                    && implies(on("Camera"), on("HighResolution"))
                    && implies(on("Basic"), on("GPS"))
                    && implies(on("GPS"), on("Basic"))
                    && !(extra_not_gps && on("GPS"))
            })
            .collect()
    }

    fn product_tuples(a: &Analyzer) -> BTreeSet<Vec<u64>> {
        a.enumerate_products(None).iter().map(|p| p.features.values().copied().collect()).collect()
    }

    fn oracle_core_dead(space: &BTreeSet<Vec<u64>>, names: &[&str]) -> (Vec<String>, Vec<String>) {
        let core = (0..names.len()).filter(|&i| space.iter().all(|t| t[i] > 0));
        let dead = (0..names.len()).filter(|&i| space.iter().all(|t| t[i] == 0));
        (
            core.map(|i| names[i].to_string()).collect(),
            dead.map(|i| names[i].to_string()).collect(),
        )
    }

    #[test]
    fn mobile_products_match_oracle() {
        let a = load(MOBILE);
        let oracle = mobile_oracle(false);
        assert_eq!(oracle.len(), 6);
        assert_eq!(product_tuples(&a), oracle);
        assert_eq!(a.count_products(), 6);
        assert!(a.valid_model());
    }

    #[test]
    fn mobile_core_and_dead() {
        let a = load(MOBILE);
        let names: Vec<&str> = a.model().features().iter().map(|f| f.name.as_str()).collect();
        let (core, dead) = oracle_core_dead(&mobile_oracle(false), &names);
        assert_eq!(core, ["MobilePhone", "Calls", "Media"]);
        assert!(dead.is_empty());
        assert_eq!(a.core_features().unwrap(), core);
        assert_eq!(a.dead_features().unwrap(), dead);
    }

    #[test]
    fn forbidding_gps_kills_basic() {
        let a = load(&format!("{MOBILE}\nnot GPS;"));
        let names: Vec<&str> = a.model().features().iter().map(|f| f.name.as_str()).collect();
        let oracle = mobile_oracle(true);
        assert_eq!(product_tuples(&a), oracle);
        let (_, dead) = oracle_core_dead(&oracle, &names);
        assert_eq!(dead, ["GPS", "Basic"]);
        assert_eq!(a.dead_features().unwrap(), dead);
    }

    /// Existence patterns of the connection model over (root, PowerLine,
    /// ADSL, Wireless) that satisfy the group semantics and the four written
    /// constraints, with the attribute prices plugged in as constants.
    fn internet_oracle(wireless_low: i64) -> BTreeSet<Vec<u64>> {
        let (root_price, power, adsl, wireless) = (420, 150, 150, 100);
        (0..4)
            .map(|_| 0..=1u64)
            .multi_cartesian_product()
            .filter(|t| {
                let children = t[1..].iter().sum::<u64>();
                t[0] == 1
                    && children == 1
                    && root_price == 20 + adsl + power + wireless
                    && (100..=200).contains(&power)
                    && (100..=200).contains(&adsl)
                    && (wireless_low..=250).contains(&wireless)
            })
            .collect()
    }

    #[test]
    fn internet_model_is_void_as_written() {
        // Wireless.price is 100 but the last constraint demands at least 150;
        // attribute constraints hold regardless of selection, so nothing fits.
        let a = load(INTERNET);
        assert!(internet_oracle(150).is_empty());
        assert_eq!(product_tuples(&a), internet_oracle(150));
        assert!(!a.valid_model());
        assert_eq!(a.core_features(), Err(AnalysisError::VoidModel));
        let Verdict::Invalid(w) = a.check_configuration(&query(&[])).unwrap() else { panic!() };
        let labels: Vec<&str> = w.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["(150 <= Wireless.price) and (Wireless.price <= 250)"]);
    }

    #[test]
    fn internet_model_with_relaxed_wireless_bound() {
        let a = load(&INTERNET.replace("150<= Wireless.price", "100<= Wireless.price"));
        let products = a.enumerate_products(None);
        assert_eq!(product_tuples(&a), internet_oracle(100));
        assert_eq!(products.len(), 3);
        for p in &products {
            assert_eq!(p.attributes["InternerConnection.price"], Value::Int(420));
        }
        assert_eq!(a.core_features().unwrap(), ["InternerConnection"]);
        assert!(a.dead_features().unwrap().is_empty());
    }

    #[test]
    fn trivial_models() {
        let a = load("FM = A;");
        assert_eq!(a.count_products(), 1);
        assert_eq!(a.core_features().unwrap(), ["A"]);
        let void = load("FM = A; not A;");
        assert!(!void.valid_model());
        assert!(void.enumerate_products(None).is_empty());
        assert_eq!(void.count_products(), 0);
        assert_eq!(void.dead_features(), Err(AnalysisError::VoidModel));
        assert_eq!(void.core_features(), Err(AnalysisError::VoidModel));
    }

    #[test]
    fn limit_truncates() {
        let a = load(MOBILE);
        let all = a.enumerate_products(None);
        assert_eq!(a.enumerate_products(Some(2)), all[..2]);
        assert_eq!(a.enumerate_products(Some(100)), all);
        assert!(a.enumerate_products(Some(0)).is_empty());
    }

    #[test]
    fn invalid_configuration_names_its_witness() {
        let a = load(MOBILE);
        let verdict = a.check_configuration(&query(&[("Camera", 1), ("HighResolution", 0)])).unwrap();
        let Verdict::Invalid(witnesses) = verdict else { panic!("expected invalid") };
        let labels: Vec<&str> = witnesses.iter().map(|w| w.label.as_str()).collect();
        assert_eq!(labels, ["Camera implies HighResolution"]);
        assert_eq!(witnesses[0].span.map(|s| s.line), Some(7));
    }

    #[test]
    fn witness_falls_back_to_search_conflicts() {
        // No single constraint is infeasible under the query alone.
        let a = load("FM = R : all [A (0..1), B (0..1), C (0..1)]; A implies B; B implies C; not C;");
        let Verdict::Invalid(w) = a.check_configuration(&query(&[("A", 1)])).unwrap() else {
            panic!("expected invalid")
        };
        assert!(!w.is_empty());
    }

    #[test]
    fn valid_and_erroneous_queries() {
        let a = load(MOBILE);
        assert_eq!(a.check_configuration(&query(&[("Calls", 1)])), Ok(Verdict::Valid));
        assert_eq!(a.check_configuration(&query(&[])), Ok(Verdict::Valid));
        assert_eq!(
            a.check_configuration(&query(&[("Unknown", 1)])),
            Err(AnalysisError::UnknownFeature("Unknown".into()))
        );
        assert!(matches!(
            a.check_configuration(&query(&[("GPS", 2)])),
            Err(AnalysisError::CountOutOfDomain { count: 2, .. })
        ));
        // Attribute variables are not features.
        let b = load(INTERNET);
        assert!(matches!(
            b.check_configuration(&query(&[("ADSL.price", 150)])),
            Err(AnalysisError::UnknownFeature(_))
        ));
    }

    #[test]
    fn clone_counts_make_distinct_products() {
        let a = load("FM = R : all [B (2..3)];");
        let counts: Vec<u64> = a.enumerate_products(None).iter().map(|p| p.features["B"]).collect();
        assert_eq!(counts, [2, 3]);
    }

    #[test]
    fn laptop_fixture() {
        let a = load(LAPTOP);
        let products = a.enumerate_products(None);
        assert_eq!(products.len() as u64, a.count_products());
        for p in &products {
            assert!(p.features["RamStick"] >= 2);
            assert!(!(p.is_selected("Hdmi") && p.is_selected("Thunderbolt")));
            assert_eq!(p.attributes["Laptop.vendor"], Value::Symbol("acme".into()));
        }
    }

    #[test]
    fn product_json_shape() {
        let a = load(&INTERNET.replace("150<= Wireless.price", "100<= Wireless.price"));
        let p = &a.enumerate_products(Some(1))[0];
        assert_eq!(
            serde_json::to_string(p).unwrap(),
            r#"{"features":{"InternerConnection":1,"PowerLine":0,"ADSL":0,"Wireless":1},"attributes":{"InternerConnection.price":420,"PowerLine.price":150,"ADSL.price":150,"Wireless.price":100}}"#
        );
    }

    #[test]
    fn load_errors_carry_spans() {
        let e = Analyzer::from_source("FM = ;").unwrap_err();
        assert!(matches!(e, LoadError::Syntax(_)));
        assert_eq!((e.span().line, e.span().column), (1, 6));
        let e = Analyzer::from_source("FM = A; B;").unwrap_err();
        assert!(matches!(e, LoadError::Resolve(_)));
        let e = Analyzer::from_source("FM = A : {s=\"x\"}; A.s < 3;").unwrap_err();
        assert!(matches!(e, LoadError::Type(_)));
    }

    const EXTRAS: [&str; 6] = [
        "Camera;",
        "not MP3;",
        "Color implies MP3;",
        "GPS or Color;",
        "not Screen;",
        "Camera and not MP3;",
    ];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn analysis_invariants(picks in proptest::collection::vec(0..EXTRAS.len(), 0..3)) {
            let extra: String = picks.iter().map(|&i| EXTRAS[i]).join("\n");
            let a = load(&format!("{MOBILE}\n{extra}"));
            let base = product_tuples(&load(MOBILE));
            let products = a.enumerate_products(None);
            prop_assert_eq!(products.len() as u64, a.count_products());
            let tuples = product_tuples(&a);
            prop_assert!(tuples.is_subset(&base));
            for p in &products {
                prop_assert_eq!(a.check_configuration(&p.to_query()).unwrap(), Verdict::Valid);
            }
            match a.core_and_dead() {
                Ok((core, dead)) => {
                    prop_assert!(core.contains(&"MobilePhone".to_string()));
                    prop_assert!(core.iter().all(|c| !dead.contains(c)));
                    let names: Vec<&str> = a.model().features().iter().map(|f| f.name.as_str()).collect();
                    prop_assert_eq!((core, dead), oracle_core_dead(&tuples, &names));
                }
                Err(e) => {
                    prop_assert_eq!(e, AnalysisError::VoidModel);
                    prop_assert!(products.is_empty());
                }
            }
        }
    }
}
