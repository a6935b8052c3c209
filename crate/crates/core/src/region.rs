//! Capacity-region evaluation for the generated- and chosen-secret models.
//!
//! A tuple (R_I, R_S, R_J, R_L) of identification, secrecy, storage, and
//! privacy-leakage rates is achievable iff for SOME alpha in (0, 1] all of
//! the following hold (rates in nats, c = rho1^2*rho2^2):
//!
//!   R_I + R_S <= 1/2 ln(1/(alpha*c + 1 - c))                  (sum rate)
//!   R_J >= 1/2 ln((alpha*c + 1 - c)/alpha) + R_I              (generated)
//!   R_J >= 1/2 ln(1/alpha)                                    (chosen)
//!   R_L >= 1/2 ln((alpha*c + 1 - c)/(alpha*rho1^2 + 1 - rho1^2)) + R_I
//!
//! The leakage bound is identical in both models; the chosen-secret model
//! pays extra storage: chosen minus generated storage equals the sum-rate
//! bound minus R_I. Every bound is strictly decreasing in alpha, so
//! membership inverts each bound to an alpha-interval by bisection and
//! intersects. alpha = 0 is excluded; limits as alpha drops to 0 are
//! represented by [`ALPHA_MIN`], which keeps every emitted trace point
//! strictly achievable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussmodel::{mi_zu, to_scaled, AuxiliaryParams, ChannelParams, UnscaledParams};

/// Stand-in for the open limit alpha -> 0 when tracing or searching.
pub const ALPHA_MIN: f64 = 1e-12;

/// Accuracy of the bound inversion in alpha. Feasible intervals that are
/// empty by less than this are beneath the method's resolution and belong to
/// the (closed) boundary.
const BISECT_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("rate {name} must be finite and nonnegative, got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error(
        "membership undecided: the feasible alpha interval is empty by {gap:.3e}, \
         within tolerance; refine the tolerance to decide"
    )]
    ToleranceTooCoarse { gap: f64 },
}

/// Whether the secret key is extracted from the enrollment observation or
/// chosen independently and masked.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecretModel {
    GeneratedSecret,
    ChosenSecret,
}

/// Parameter form: normalized squared correlations or raw variances.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum RegionForm {
    Scaled(ChannelParams),
    Unscaled(UnscaledParams),
}

/// A membership query: model, parameters, and the decision tolerance used to
/// flag boundary cases (in alpha units).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RegionQuery {
    model: SecretModel,
    form: RegionForm,
    tolerance: f64,
}

impl RegionQuery {
    /// Tolerance must be positive; values in (0, 1e-6] are recommended since
    /// the bound inversion itself is accurate to about 1e-12 in alpha.
    pub fn new(model: SecretModel, form: RegionForm, tolerance: f64) -> Result<Self, RegionError> {
        if !(tolerance > 0.0) {
            return Err(RegionError::BadTolerance(tolerance));
        }
        Ok(Self {
            model,
            form,
            tolerance,
        })
    }

    pub fn model(&self) -> SecretModel {
        self.model
    }

    pub fn form(&self) -> RegionForm {
        self.form
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Channel view of the query parameters; unscaled forms normalize to
    /// rho_i^2 = sigma_x^2/(sigma_x^2 + sigma_i^2).
    pub fn scaled_params(&self) -> ChannelParams {
        match self.form {
            RegionForm::Scaled(p) => p,
            // Valid variances always normalize into (0, 1] x (0, 1).
            RegionForm::Unscaled(u) => to_scaled(&u).expect("valid variances normalize"),
        }
    }
}

/// Rate tuple (identification, secrecy, storage, leakage), nats, all finite
/// and nonnegative.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTuple {
    r_i: f64,
    r_s: f64,
    r_j: f64,
    r_l: f64,
}

impl RateTuple {
    pub fn new(r_i: f64, r_s: f64, r_j: f64, r_l: f64) -> Result<Self, RegionError> {
        for (name, value) in [("r_i", r_i), ("r_s", r_s), ("r_j", r_j), ("r_l", r_l)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(RegionError::BadRate { name, value });
            }
        }
        Ok(Self { r_i, r_s, r_j, r_l })
    }

    pub fn r_i(&self) -> f64 {
        self.r_i
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    pub fn r_j(&self) -> f64 {
        self.r_j
    }

    pub fn r_l(&self) -> f64 {
        self.r_l
    }
}

/// Outcome of a membership query.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Achievability {
    pub achievable: bool,
    /// A feasible alpha (interval midpoint) when achievable.
    pub witness: Option<f64>,
    /// True when the feasible alpha interval is narrower than the query
    /// tolerance: the tuple sits on the region boundary.
    pub boundary: bool,
}

/// Upper bound on R_I + R_S at the given alpha: mi_zu(p, a), in nats.
/// Strictly decreasing in alpha; 0 at alpha = 1.
pub fn sum_rate_bound(p: &ChannelParams, a: AuxiliaryParams) -> f64 {
    mi_zu(p, a)
}

/// Minimum storage rate R_J at the given alpha, in nats. Strictly decreasing
/// in alpha. The chosen-secret bound exceeds the generated-secret bound by
/// exactly sum_rate_bound(p, a) - r_i.
pub fn storage_bound(model: SecretModel, p: &ChannelParams, a: AuxiliaryParams, r_i: f64) -> f64 {
    debug_assert!(r_i >= 0.0);
    let alpha = a.alpha();
    match model {
        SecretModel::GeneratedSecret => {
            let c = p.rho_prod_sq();
            0.5 * ((alpha * c + (1.0 - c)) / alpha).ln() + r_i
        }
        SecretModel::ChosenSecret => -0.5 * alpha.ln(),
    }
}

/// Minimum privacy-leakage rate R_L at the given alpha, in nats; the same
/// expression for both models. Equals mi_xu(p, a) - mi_zu(p, a) + r_i and is
/// strictly decreasing in alpha.
pub fn leakage_bound(p: &ChannelParams, a: AuxiliaryParams, r_i: f64) -> f64 {
    debug_assert!(r_i >= 0.0);
    let alpha = a.alpha();
    let c = p.rho_prod_sq();
    let r1 = p.rho1_sq();
    // Grouping avoids cancellation at rho1_sq = 1 with small alpha.
    0.5 * ((alpha * c + (1.0 - c)) / (alpha * r1 + (1.0 - r1))).ln() + r_i
}

fn aux(alpha: f64) -> AuxiliaryParams {
    AuxiliaryParams::new(alpha).expect("alpha stays within (0, 1] during search")
}

/// Largest alpha in [ALPHA_MIN, 1] satisfying `pred`, where `pred` is true on
/// an interval (0, a*] and false above. Bisects until the midpoint stops
/// moving, so the result is the exact floating-point boundary.
fn largest_alpha_where(pred: impl Fn(f64) -> bool) -> Option<f64> {
    if pred(1.0) {
        return Some(1.0);
    }
    if !pred(ALPHA_MIN) {
        return None;
    }
    let (mut lo, mut hi) = (ALPHA_MIN, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Smallest alpha in [ALPHA_MIN, 1] satisfying `pred`, where `pred` is true
/// on an interval [a*, 1] and false below.
fn smallest_alpha_where(pred: impl Fn(f64) -> bool) -> Option<f64> {
    if !pred(1.0) {
        return None;
    }
    if pred(ALPHA_MIN) {
        return Some(ALPHA_MIN);
    }
    let (mut lo, mut hi) = (ALPHA_MIN, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Decides whether `t` lies in the selected capacity region.
///
/// Each bound, monotone in alpha, is inverted to an alpha half-interval; the
/// tuple is achievable iff the intersection is nonempty. The returned witness
/// is the intersection midpoint; for intervals wider than the inversion
/// resolution (1e-12 in alpha) it satisfies all three bounds exactly, at the
/// boundary it satisfies them to within that resolution. A nonempty
/// intersection narrower than the query tolerance is reported achievable with
/// the boundary flag set (the region is closed, so boundary points belong to
/// it); an intersection EMPTY by more than the resolution but at most the
/// tolerance cannot be certified either way and returns
/// [`RegionError::ToleranceTooCoarse`].
pub fn is_achievable(t: &RateTuple, q: &RegionQuery) -> Result<Achievability, RegionError> {
    let p = q.scaled_params();
    let sum_target = t.r_i + t.r_s;
    let hi = largest_alpha_where(|alpha| sum_rate_bound(&p, aux(alpha)) >= sum_target);
    let lo_storage =
        smallest_alpha_where(|alpha| storage_bound(q.model, &p, aux(alpha), t.r_i) <= t.r_j);
    let lo_leakage = smallest_alpha_where(|alpha| leakage_bound(&p, aux(alpha), t.r_i) <= t.r_l);
    let not_achievable = Ok(Achievability {
        achievable: false,
        witness: None,
        boundary: false,
    });
    let (Some(hi), Some(lo_s), Some(lo_l)) = (hi, lo_storage, lo_leakage) else {
        return not_achievable;
    };
    let lo = lo_s.max(lo_l);
    if lo <= hi + BISECT_RESOLUTION {
        Ok(Achievability {
            achievable: true,
            witness: Some(0.5 * (lo.min(hi) + hi)),
            boundary: hi - lo <= q.tolerance,
        })
    } else if lo - hi <= q.tolerance {
        Err(RegionError::ToleranceTooCoarse { gap: lo - hi })
    } else {
        not_achievable
    }
}

/// Projection plane for [`boundary_trace`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePlane {
    RjRs,
    RjRl,
}

/// Traces the region boundary projected onto the (R_J, R_S) or (R_J, R_L)
/// plane at fixed R_I, sweeping alpha log-uniformly in `grid` points
/// (grid >= 2) from the sum-rate crossing down to [`ALPHA_MIN`].
///
/// The sweep starts at the largest alpha whose sum-rate bound still admits
/// r_i (alpha = 1 when r_i = 0, so the generated-model RJ_RS trace starts at
/// (r_i, 0)); a larger alpha would emit points outside the region. Emits
/// (alpha, storage_bound, max(0, sum_rate_bound - r_i)) or
/// (alpha, storage_bound, leakage_bound) triples; alpha is nonincreasing and
/// both rate coordinates are nondecreasing along the trace, and every emitted
/// point is achievable. Returns an empty trace when r_i is at or beyond the
/// identification capacity (the alpha -> 0 supremum of the sum-rate bound).
pub fn boundary_trace(
    q: &RegionQuery,
    r_i: f64,
    plane: TracePlane,
    grid: usize,
) -> Vec<(f64, f64, f64)> {
    assert!(grid >= 2, "trace needs at least 2 points");
    debug_assert!(r_i >= 0.0);
    let p = q.scaled_params();
    let Some(alpha_max) = largest_alpha_where(|alpha| sum_rate_bound(&p, aux(alpha)) >= r_i)
    else {
        return Vec::new();
    };
    let ratio = ALPHA_MIN / alpha_max;
    (0..grid)
        .map(|k| {
            let alpha = alpha_max * ratio.powf(k as f64 / (grid - 1) as f64);
            let a = aux(alpha);
            let r_j = storage_bound(q.model, &p, a, r_i);
            let second = match plane {
                TracePlane::RjRs => (sum_rate_bound(&p, a) - r_i).max(0.0),
                TracePlane::RjRl => leakage_bound(&p, a, r_i),
            };
            (alpha, r_j, second)
        })
        .collect()
}

/// The three bounds (sum rate, storage, leakage) evaluated directly from raw
/// variances, in nats, without normalizing first. With
/// D(alpha) = alpha*sx^2*sx^2 + sx^2*s1^2 + s1^2*s2^2 + s2^2*sx^2 and
/// P = (sx^2+s1^2)(sx^2+s2^2):
///
///   sum rate         = 1/2 ln(P/D)
///   storage (gen.)   = 1/2 ln(D/(alpha*P)) + r_i
///   storage (chosen) = 1/2 ln(1/alpha)
///   leakage          = 1/2 ln(D/((alpha*sx^2+s1^2)(sx^2+s2^2))) + r_i
///
/// Identical to the scaled bounds after normalization; D(1) = P makes every
/// bound 0 at alpha = 1 (with r_i = 0).
pub fn unscaled_region_bounds(
    u: &UnscaledParams,
    a: AuxiliaryParams,
    r_i: f64,
    model: SecretModel,
) -> (f64, f64, f64) {
    debug_assert!(r_i >= 0.0);
    let (sx, s1, s2) = (u.sigma_x_sq(), u.sigma1_sq(), u.sigma2_sq());
    let alpha = a.alpha();
    let d = alpha * sx * sx + sx * s1 + s1 * s2 + s2 * sx;
    let prod = (sx + s1) * (sx + s2);
    let sum_rate = 0.5 * (prod / d).ln();
    let storage = match model {
        SecretModel::GeneratedSecret => 0.5 * (d / (alpha * prod)).ln() + r_i,
        SecretModel::ChosenSecret => -0.5 * alpha.ln(),
    };
    let leakage = 0.5 * (d / ((alpha * sx + s1) * (sx + s2))).ln() + r_i;
    (sum_rate, storage, leakage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmodel::mi_xu;
    use crate::rate::bits;

    fn p(r1: f64, r2: f64) -> ChannelParams {
        ChannelParams::new(r1, r2).unwrap()
    }

    fn query(model: SecretModel, params: ChannelParams, tol: f64) -> RegionQuery {
        RegionQuery::new(model, RegionForm::Scaled(params), tol).unwrap()
    }

    #[test]
    fn sum_rate_examples() {
        let q = p(0.75, 2.0 / 3.0);
        assert_eq!(sum_rate_bound(&q, aux(1.0)), 0.0);
        assert!((bits(sum_rate_bound(&q, aux(ALPHA_MIN))) - 0.5).abs() < 1e-9);
        let q2 = p(0.9, 0.875);
        let want = 0.5 * (80.0f64 / 17.0).log2();
        assert!((bits(sum_rate_bound(&q2, aux(ALPHA_MIN))) - want).abs() < 1e-9);
        assert_eq!(
            sum_rate_bound(&q, aux(0.3)),
            mi_zu(&q, aux(0.3)),
            "sum-rate bound is I(Z;U)"
        );
    }

    #[test]
    fn storage_examples_and_identity() {
        let q = p(0.75, 2.0 / 3.0);
        assert_eq!(
            storage_bound(SecretModel::GeneratedSecret, &q, aux(1.0), 0.0),
            0.0
        );
        assert!(
            (bits(storage_bound(SecretModel::ChosenSecret, &q, aux(0.25), 0.0)) - 1.0).abs()
                < 1e-12
        );
        // Generated at alpha = 1/2: (c*alpha + 1 - c)/alpha = (3/4)/(1/2) = 3/2.
        let g = storage_bound(SecretModel::GeneratedSecret, &q, aux(0.5), 0.0);
        assert!((bits(g) - 0.5 * 1.5f64.log2()).abs() < 1e-12);
        // chosen - generated = sum_rate - r_i, all alpha and r_i.
        for &alpha in &[1e-6, 0.1, 0.5, 0.9, 1.0] {
            for &r_i in &[0.0, 0.05, 0.4] {
                let chosen = storage_bound(SecretModel::ChosenSecret, &q, aux(alpha), r_i);
                let gen = storage_bound(SecretModel::GeneratedSecret, &q, aux(alpha), r_i);
                let want = sum_rate_bound(&q, aux(alpha)) - r_i;
                assert!((chosen - gen - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leakage_examples_and_identity() {
        assert_eq!(leakage_bound(&p(0.75, 2.0 / 3.0), aux(1.0), 0.0), 0.0);
        let q = p(15.0 / 16.0, 2.0 / 3.0);
        assert!((bits(leakage_bound(&q, aux(ALPHA_MIN), 0.0)) - 0.5 * 6.0f64.log2()).abs() < 1e-9);
        for &alpha in &[0.01, 0.3, 0.77, 1.0] {
            for &r_i in &[0.0, 0.12] {
                let a = aux(alpha);
                let direct = leakage_bound(&q, a, r_i);
                let composed = mi_xu(&q, a) - mi_zu(&q, a) + r_i;
                assert!((direct - composed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounds_decrease_in_alpha() {
        let q = p(0.9, 0.875);
        let alphas: Vec<f64> = (1..=40).map(|k| k as f64 / 40.0).collect();
        for w in alphas.windows(2) {
            let (a0, a1) = (aux(w[0]), aux(w[1]));
            assert!(sum_rate_bound(&q, a0) > sum_rate_bound(&q, a1));
            for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
                assert!(storage_bound(model, &q, a0, 0.1) > storage_bound(model, &q, a1, 0.1));
            }
            assert!(leakage_bound(&q, a0, 0.1) > leakage_bound(&q, a1, 0.1));
        }
    }

    #[test]
    fn origin_is_achievable_at_alpha_one() {
        let t = RateTuple::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let q = query(SecretModel::GeneratedSecret, p(0.75, 2.0 / 3.0), 1e-6);
        let got = is_achievable(&t, &q).unwrap();
        assert!(got.achievable);
        assert_eq!(got.witness, Some(1.0));
        assert!(got.boundary, "all three bounds are tight at alpha = 1");
    }

    #[test]
    fn secrecy_above_supremum_is_not_achievable() {
        let params = p(0.75, 2.0 / 3.0);
        let cap = crate::gaussmodel::mi_zy(&params);
        let t = RateTuple::new(0.0, cap + 0.01, 1e3, 1e3).unwrap();
        let q = query(SecretModel::GeneratedSecret, params, 1e-6);
        let got = is_achievable(&t, &q).unwrap();
        assert!(!got.achievable);
        assert_eq!(got.witness, None);
    }

    #[test]
    fn boundary_perturbation_flips_membership() {
        let params = p(0.75, 2.0 / 3.0);
        let (alpha, r_i, tol) = (0.5, 0.05, 1e-6);
        let a = aux(alpha);
        for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
            let q = query(model, params, tol);
            let r_s = sum_rate_bound(&params, a) - r_i;
            let r_j = storage_bound(model, &params, a, r_i);
            let r_l = leakage_bound(&params, a, r_i);
            let probe = |ds: f64| {
                let t = RateTuple::new(r_i, r_s + ds, r_j, r_l).unwrap();
                is_achievable(&t, &q)
            };
            let inside = probe(-tol).unwrap();
            assert!(inside.achievable, "{model:?}: -tolerance must be inside");
            let outside = probe(tol).unwrap();
            assert!(!outside.achievable, "{model:?}: +tolerance must be outside");
            // A bump too small to certify at this tolerance is refused.
            assert!(matches!(
                probe(tol / 10.0),
                Err(RegionError::ToleranceTooCoarse { .. })
            ));
        }
    }

    #[test]
    fn witness_satisfies_all_bounds() {
        let params = p(0.9, 0.875);
        let q = query(SecretModel::ChosenSecret, params, 1e-9);
        let t = RateTuple::new(0.05, 0.3, 1.2, 0.9).unwrap();
        let got = is_achievable(&t, &q).unwrap();
        assert!(got.achievable);
        let a = aux(got.witness.unwrap());
        assert!(t.r_i() + t.r_s() <= sum_rate_bound(&params, a));
        assert!(t.r_j() >= storage_bound(SecretModel::ChosenSecret, &params, a, t.r_i()));
        assert!(t.r_l() >= leakage_bound(&params, a, t.r_i()));
    }

    #[test]
    fn trace_starts_at_shifted_origin_and_is_monotone() {
        let params = p(0.9, 0.875);
        for r_i in [0.0, 0.07] {
            for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
                let q = query(model, params, 1e-6);
                for plane in [TracePlane::RjRs, TracePlane::RjRl] {
                    let trace = boundary_trace(&q, r_i, plane, 200);
                    assert_eq!(trace.len(), 200);
                    if r_i == 0.0 {
                        assert_eq!(trace[0].0, 1.0, "r_i = 0 sweeps from alpha = 1");
                    }
                    if plane == TracePlane::RjRs {
                        // The sweep starts where the sum-rate bound meets r_i,
                        // so R_S starts at 0; with r_i = 0 that crossing is
                        // alpha = 1 and the generated trace starts at (r_i, 0).
                        assert!(trace[0].2.abs() < 1e-12);
                        if model == SecretModel::GeneratedSecret && r_i == 0.0 {
                            assert!(trace[0].1.abs() < 1e-15);
                        }
                    }
                    for w in trace.windows(2) {
                        assert!(w[1].0 <= w[0].0, "alpha must not increase");
                        assert!(w[1].1 >= w[0].1, "R_J must not decrease");
                        assert!(
                            w[1].2 >= w[0].2 - 1e-15,
                            "second coordinate must not decrease"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn trace_asymptote_matches_secrecy_capacity() {
        let params = p(0.9, 0.875);
        let q = query(SecretModel::GeneratedSecret, params, 1e-6);
        let trace = boundary_trace(&q, 0.0, TracePlane::RjRs, 64);
        let last = trace.last().unwrap();
        assert!((bits(last.2) - 0.5 * (80.0f64 / 17.0).log2()).abs() < 1e-9);
    }

    #[test]
    fn traced_points_are_achievable() {
        let params = p(0.75, 2.0 / 3.0);
        let r_i = 0.04;
        for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
            let q = query(model, params, 1e-6);
            let rs = boundary_trace(&q, r_i, TracePlane::RjRs, 24);
            let rl = boundary_trace(&q, r_i, TracePlane::RjRl, 24);
            for k in 0..24 {
                let t = RateTuple::new(r_i, rs[k].2, rs[k].1, rl[k].2).unwrap();
                let got = is_achievable(&t, &q).unwrap_or_else(|e| {
                    panic!("{model:?} traced point {k} must be decidable: {e}")
                });
                assert!(got.achievable, "{model:?} traced point {k}");
            }
        }
    }

    #[test]
    fn unscaled_matches_scaled_after_normalization() {
        let grid = [
            (9.0, 1.0, 9.0 / 7.0),
            (1.0, 0.5, 2.0),
            (4.0, 0.0, 1.0),
            (0.3, 2.0, 0.7),
        ];
        for &(sx, s1, s2) in &grid {
            let u = UnscaledParams::new(sx, s1, s2).unwrap();
            let sp = to_scaled(&u).unwrap();
            for &alpha in &[1e-9, 0.2, 0.5, 1.0] {
                for &r_i in &[0.0, 0.3] {
                    for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
                        let a = aux(alpha);
                        let (sum, stor, leak) = unscaled_region_bounds(&u, a, r_i, model);
                        assert!((sum - sum_rate_bound(&sp, a)).abs() < 1e-9);
                        assert!((stor - storage_bound(model, &sp, a, r_i)).abs() < 1e-9);
                        assert!((leak - leakage_bound(&sp, a, r_i)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn unscaled_zero_at_alpha_one() {
        let u = UnscaledParams::new(2.5, 0.8, 1.3).unwrap();
        let (sum, stor, leak) =
            unscaled_region_bounds(&u, aux(1.0), 0.0, SecretModel::GeneratedSecret);
        assert!(sum.abs() < 1e-12);
        assert!(stor.abs() < 1e-12);
        assert!(leak.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RateTuple::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(RateTuple::new(0.0, f64::INFINITY, 0.0, 0.0).is_err());
        assert!(RegionQuery::new(
            SecretModel::GeneratedSecret,
            RegionForm::Scaled(p(0.5, 0.5)),
            0.0
        )
        .is_err());
    }
}
