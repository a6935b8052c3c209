//! Scalar trade-off functions of the storage budget, for the generated-secret
//! model at zero identification rate: the largest secret-key rate and the
//! smallest privacy leakage attainable with helper storage r_j, their
//! asymptotic limits as r_j grows, and their slopes at r_j = 0, plus the two
//! reference tables over the built-in example parameter sets.
//!
//! Everything is parametrized by alpha through
//! r_j(alpha) = 1/2 ln((alpha*c + 1 - c)/alpha), c = rho1^2*rho2^2, which maps
//! (0, 1] onto [0, inf) bijectively, so each curve is the region boundary
//! re-expressed as a function of storage. Closed forms (nats, with
//! e = exp(2*r_j); any display base b uses b^(2 r_j) and the identities hold
//! unchanged because the curves compose a rate with its inverse):
//!
//!   max_secrecy(r_j)  = 1/2 ln((1 - c/e)/(1 - c))
//!   min_leakage(r_j)  = 1/2 ln((1 - c)/(1 - rho1^2 + rho1^2 (1 - rho2^2)/e))
//!   secrecy_limit     = 1/2 ln(1/(1 - c))                    (= I(Z;Y))
//!   leakage_limit     = 1/2 ln((1 - c)/(1 - rho1^2))         (= I(X;Y) - I(Z;Y))
//!   secrecy_slope     = c/(1 - c)
//!   leakage_slope     = rho1^2 (1 - rho2^2)/(1 - c)
//!
//! The slopes are ratios of rates, hence log-base invariant.

use crate::gaussmodel::{mi_zy, AuxiliaryParams, ChannelParams};
use crate::rate::{bits, parse_ratio, round2};

/// A labelled list of channel parameter cases.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleSet {
    pub label: String,
    pub cases: Vec<ChannelParams>,
}

/// The nine built-in (rho1^2, rho2^2) cases as exact fraction strings,
/// grouped by example label. Single source of truth for both the numeric
/// parameters and the fraction text emitted in CSV output.
pub const EXAMPLE_FRACTIONS: [(&str, [(&str, &str); 3]); 3] = [
    ("Ex1", [("3/4", "2/3"), ("7/8", "2/3"), ("15/16", "2/3")]),
    ("Ex2", [("3/4", "2/3"), ("9/10", "7/8"), ("15/16", "11/12")]),
    ("Ex3", [("3/4", "2/3"), ("3/4", "8/9"), ("3/4", "14/15")]),
];

/// Case labels within each example set.
pub const CASE_LABELS: [&str; 3] = ["a", "b", "c"];

/// The three built-in example sets.
pub fn builtin_examples() -> Vec<ExampleSet> {
    EXAMPLE_FRACTIONS
        .iter()
        .map(|(label, cases)| ExampleSet {
            label: (*label).to_string(),
            cases: cases
                .iter()
                .map(|(r1, r2)| {
                    ChannelParams::new(
                        parse_ratio(r1).expect("built-in fraction parses"),
                        parse_ratio(r2).expect("built-in fraction parses"),
                    )
                    .expect("built-in case is valid")
                })
                .collect(),
        })
        .collect()
}

/// Minimum storage rate at the given alpha (generated-secret model, r_i = 0),
/// in nats: strictly decreasing, 0 at alpha = 1, diverging as alpha drops
/// to 0.
pub fn rj_of_alpha(p: &ChannelParams, a: AuxiliaryParams) -> f64 {
    let c = p.rho_prod_sq();
    let alpha = a.alpha();
    0.5 * ((alpha * c + (1.0 - c)) / alpha).ln()
}

/// Inverse of [`rj_of_alpha`]: alpha = (1 - c)/(exp(2 r_j) - c), mapping
/// r_j = 0 to alpha = 1 exactly. Underflows to 0 for r_j beyond roughly 350
/// nats; callers constructing [`AuxiliaryParams`] from the result must clamp.
pub fn alpha_of_rj(p: &ChannelParams, r_j: f64) -> f64 {
    debug_assert!(r_j >= 0.0);
    let c = p.rho_prod_sq();
    (1.0 - c) / ((2.0 * r_j).exp() - c)
}

/// Largest secret-key rate at storage budget r_j (nats): 0 at r_j = 0,
/// strictly increasing, saturating at [`secrecy_limit`].
pub fn max_secrecy(p: &ChannelParams, r_j: f64) -> f64 {
    debug_assert!(r_j >= 0.0);
    let c = p.rho_prod_sq();
    // (1 - c/e)/(1 - c) = 1 + c*(1 - 1/e)/(1 - c); ln_1p keeps r_j = 0 exact
    // and small budgets accurate.
    0.5 * (c * -(-2.0 * r_j).exp_m1() / (1.0 - c)).ln_1p()
}

/// Smallest privacy leakage at storage budget r_j (nats): 0 at r_j = 0,
/// strictly increasing, saturating at [`leakage_limit`].
pub fn min_leakage(p: &ChannelParams, r_j: f64) -> f64 {
    debug_assert!(r_j >= 0.0);
    let c = p.rho_prod_sq();
    let shrink = p.rho1_sq() * (1.0 - p.rho2_sq()) * (-2.0 * r_j).exp_m1();
    -0.5 * (shrink / (1.0 - c)).ln_1p()
}

/// Supremum of [`max_secrecy`]: mi_zy(p), always finite.
pub fn secrecy_limit(p: &ChannelParams) -> f64 {
    mi_zy(p)
}

/// Supremum of [`min_leakage`]: mi_xy(p) - mi_zy(p), positive infinity at
/// rho1_sq = 1 (noiseless enrollment leaks the full bio-data).
pub fn leakage_limit(p: &ChannelParams) -> f64 {
    if p.rho1_sq() >= 1.0 {
        f64::INFINITY
    } else {
        0.5 * ((1.0 - p.rho_prod_sq()) / (1.0 - p.rho1_sq())).ln()
    }
}

/// d max_secrecy/d r_j at r_j = 0: c/(1 - c), dimensionless.
pub fn secrecy_slope(p: &ChannelParams) -> f64 {
    let c = p.rho_prod_sq();
    c / (1.0 - c)
}

/// d min_leakage/d r_j at r_j = 0: rho1^2 (1 - rho2^2)/(1 - c), dimensionless;
/// equals secrecy_slope * (1 - rho2^2)/rho2^2.
pub fn leakage_slope(p: &ChannelParams) -> f64 {
    p.rho1_sq() * (1.0 - p.rho2_sq()) / (1.0 - p.rho_prod_sq())
}

/// One table: a row per example set, a column per case.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub secrecy: Vec<Vec<f64>>,
    pub leakage: Vec<Vec<f64>>,
}

/// Builds the two reference tables: asymptotic (secrecy_limit, leakage_limit)
/// in bits and zero-storage (secrecy_slope, leakage_slope), every entry
/// rounded half away from zero to 2 decimals. Infinite limits pass through
/// unrounded.
pub fn make_tables(examples: &[ExampleSet]) -> (RateTable, RateTable) {
    let cell = |v: f64| if v.is_finite() { round2(v) } else { v };
    let collect = |f: &dyn Fn(&ChannelParams) -> f64| -> Vec<Vec<f64>> {
        examples
            .iter()
            .map(|ex| ex.cases.iter().map(|p| cell(f(p))).collect())
            .collect()
    };
    let limits = RateTable {
        secrecy: collect(&|p| bits(secrecy_limit(p))),
        leakage: collect(&|p| bits(leakage_limit(p))),
    };
    let slopes = RateTable {
        secrecy: collect(&secrecy_slope),
        leakage: collect(&leakage_slope),
    };
    (limits, slopes)
}
