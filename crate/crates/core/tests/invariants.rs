//! Property tests for the structural invariants of the rate region and its
//! supporting machinery: information-quantity orderings, bound identities,
//! membership consistency, parameterization round-trips, and estimator
//! sanity. Each property samples channel parameters and alpha over wide
//! ranges rather than pinning example values.

use bislab::codec::{mask, unmask};
use bislab::gaussmodel::{
    mi_xu, mi_yu, mi_zu, mi_zy, sample_forward, AuxiliaryParams, ChannelParams,
};
use bislab::mcverify::{discrete_plugin_mi, gaussian_mi_from_samples};
use bislab::rate::bits;
use bislab::ratefuncs::{
    alpha_of_rj, leakage_limit, max_secrecy, min_leakage, rj_of_alpha, secrecy_limit,
};
use bislab::region::{
    is_achievable, leakage_bound, storage_bound, sum_rate_bound, RateTuple, RegionForm,
    RegionQuery, SecretModel, ALPHA_MIN,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ChannelParams> {
    (0.05..0.995f64, 0.05..0.995f64).prop_map(|(r1, r2)| ChannelParams::new(r1, r2).unwrap())
}

/// Log-uniform alpha over [1e-9, 1].
fn alpha() -> impl Strategy<Value = AuxiliaryParams> {
    (0.0..=9.0f64).prop_map(|e| AuxiliaryParams::new(10f64.powf(-e)).unwrap())
}

proptest! {
    /// Markov chain Z - X - Y - U orders the mutual informations.
    #[test]
    fn data_processing_ordering(p in params(), a in alpha()) {
        let (yu, xu, zu) = (mi_yu(a), mi_xu(&p, a), mi_zu(&p, a));
        prop_assert!(yu >= xu - 1e-12, "I(Y;U) {yu} < I(X;U) {xu}");
        prop_assert!(xu >= zu - 1e-12, "I(X;U) {xu} < I(Z;U) {zu}");
        prop_assert!(zu >= 0.0);
    }

    /// The chosen-secret storage bound exceeds the generated-secret one by
    /// exactly the sum-rate bound minus the identification rate: the masked
    /// key rides along in storage.
    #[test]
    fn storage_bound_identity(p in params(), a in alpha(), u in 0.0..1.0f64) {
        let r_i = u * mi_zu(&p, a);
        let gen = storage_bound(SecretModel::GeneratedSecret, &p, a, r_i);
        let cho = storage_bound(SecretModel::ChosenSecret, &p, a, r_i);
        let gap = sum_rate_bound(&p, a) - r_i;
        prop_assert!((cho - gen - gap).abs() <= 1e-10 * (1.0 + cho.abs()),
            "chosen {cho} - generated {gen} != sum - r_i = {gap}");
    }

    /// Leakage bound decomposes as I(X;U) - I(Z;U) + R_I.
    #[test]
    fn leakage_bound_identity(p in params(), a in alpha(), r_i in 0.0..2.0f64) {
        let lhs = leakage_bound(&p, a, r_i);
        let rhs = mi_xu(&p, a) - mi_zu(&p, a) + r_i;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    /// All three bounds are strictly decreasing in alpha (the identification
    /// rate term aside, which does not depend on alpha).
    #[test]
    fn bounds_decrease_in_alpha(p in params(), a in alpha(), shrink in 0.01..0.99f64) {
        let smaller = AuxiliaryParams::new(a.alpha() * shrink).unwrap();
        for model in [SecretModel::GeneratedSecret, SecretModel::ChosenSecret] {
            prop_assert!(storage_bound(model, &p, smaller, 0.3)
                > storage_bound(model, &p, a, 0.3));
        }
        prop_assert!(sum_rate_bound(&p, smaller) > sum_rate_bound(&p, a));
        prop_assert!(leakage_bound(&p, smaller, 0.3) > leakage_bound(&p, a, 0.3));
    }

    /// One-time pad round-trip over the 1-based key alphabet.
    #[test]
    fn mask_round_trip(m_s in 1..=128usize, a in 0..128usize, b in 0..128usize) {
        let s_c = 1 + a % m_s;
        let s_g = 1 + b % m_s;
        let masked = mask(s_c, s_g, m_s);
        prop_assert!((1..=m_s).contains(&masked));
        prop_assert_eq!(unmask(masked, s_g, m_s), s_c);
    }

    /// Achievability is monotone: decreasing the secrecy rate and increasing
    /// the storage and leakage allowances keeps a tuple achievable.
    #[test]
    fn region_is_downward_closed(
        p in params(),
        a in alpha(),
        u in 0.0..1.0f64,
        v in 0.0..1.0f64,
        slack in 0.0..2.0f64,
        model in prop_oneof![Just(SecretModel::GeneratedSecret), Just(SecretModel::ChosenSecret)],
    ) {
        let r_i = 0.8 * u * mi_zu(&p, a);
        let base = RateTuple::new(
            r_i,
            (mi_zu(&p, a) - r_i) * v,
            storage_bound(model, &p, a, r_i),
            leakage_bound(&p, a, r_i),
        ).unwrap();
        let q = RegionQuery::new(model, RegionForm::Scaled(p), 1e-9).unwrap();
        prop_assert!(is_achievable(&base, &q).unwrap().achievable);
        let relaxed = RateTuple::new(
            base.r_i(),
            base.r_s() * v,
            base.r_j() + slack,
            base.r_l() + slack,
        ).unwrap();
        prop_assert!(is_achievable(&relaxed, &q).unwrap().achievable);
    }

    /// Every chosen-secret achievable tuple is generated-secret achievable.
    #[test]
    fn chosen_region_within_generated(
        p in params(),
        a in alpha(),
        u in 0.0..1.0f64,
        v in 0.0..1.0f64,
    ) {
        let r_i = 0.8 * u * mi_zu(&p, a);
        let t = RateTuple::new(
            r_i,
            (mi_zu(&p, a) - r_i) * v,
            storage_bound(SecretModel::ChosenSecret, &p, a, r_i),
            leakage_bound(&p, a, r_i),
        ).unwrap();
        let chosen = RegionQuery::new(SecretModel::ChosenSecret, RegionForm::Scaled(p), 1e-9)
            .unwrap();
        let generated = RegionQuery::new(SecretModel::GeneratedSecret, RegionForm::Scaled(p), 1e-9)
            .unwrap();
        prop_assert!(is_achievable(&t, &chosen).unwrap().achievable);
        prop_assert!(is_achievable(&t, &generated).unwrap().achievable);
    }

    /// Interval membership agrees with a brute-force alpha grid scan in the
    /// one direction the grid can certify: a feasible grid point implies an
    /// achievable verdict. A reported witness must satisfy all bounds.
    #[test]
    fn membership_agrees_with_grid_scan(
        p in params(),
        r_i in 0.0..1.0f64,
        r_s in 0.0..1.0f64,
        r_j in 0.0..6.0f64,
        r_l in 0.0..3.0f64,
        model in prop_oneof![Just(SecretModel::GeneratedSecret), Just(SecretModel::ChosenSecret)],
    ) {
        let t = RateTuple::new(r_i, r_s, r_j, r_l).unwrap();
        let q = RegionQuery::new(model, RegionForm::Scaled(p), 1e-9).unwrap();
        let verdict = is_achievable(&t, &q).unwrap();
        let feasible_at = |alpha: f64| {
            let a = AuxiliaryParams::new(alpha).unwrap();
            r_i + r_s <= sum_rate_bound(&p, a)
                && r_j >= storage_bound(model, &p, a, r_i)
                && r_l >= leakage_bound(&p, a, r_i)
        };
        let grid_hit = (0..200).any(|k| {
            feasible_at(ALPHA_MIN.powf(k as f64 / 199.0))
        });
        prop_assert!(!grid_hit || verdict.achievable,
            "grid found a feasible alpha but membership said no");
        if let Some(w) = verdict.witness {
            prop_assert!(feasible_at(w) || verdict.boundary,
                "witness {w} violates a bound away from the boundary");
        }
    }

    /// rj_of_alpha and alpha_of_rj invert each other.
    #[test]
    fn alpha_round_trip(p in params(), a in alpha()) {
        let back = alpha_of_rj(&p, rj_of_alpha(&p, a));
        prop_assert!((back - a.alpha()).abs() <= 1e-9 * (1.0 + a.alpha()),
            "alpha {} -> rj -> {back}", a.alpha());
    }

    /// The storage-constrained optima are nondecreasing in storage and
    /// saturate at the closed-form limits.
    #[test]
    fn rate_functions_saturate(p in params(), r_j in 0.0..4.0f64, step in 0.01..1.0f64) {
        let (s0, s1) = (max_secrecy(&p, r_j), max_secrecy(&p, r_j + step));
        let (l0, l1) = (min_leakage(&p, r_j), min_leakage(&p, r_j + step));
        prop_assert!(s1 >= s0 && l1 >= l0, "not monotone at r_j {r_j}");
        prop_assert!(s1 <= secrecy_limit(&p) + 1e-12);
        prop_assert!(l1 <= leakage_limit(&p) + 1e-12);
        prop_assert!(max_secrecy(&p, 60.0) >= secrecy_limit(&p) - 1e-9);
        prop_assert!(min_leakage(&p, 60.0) >= leakage_limit(&p) - 1e-9);
        prop_assert_eq!(max_secrecy(&p, 0.0), 0.0);
        prop_assert_eq!(min_leakage(&p, 0.0), 0.0);
    }

    /// No identification rate beyond I(Z;Y) is achievable, while rates
    /// bounded away from it are, given generous storage and leakage.
    #[test]
    fn identification_rate_ceiling(p in params(), u in 0.0..1.0f64) {
        let ceiling = mi_zy(&p);
        let q = RegionQuery::new(
            SecretModel::GeneratedSecret, RegionForm::Scaled(p), 1e-9,
        ).unwrap();
        let above = RateTuple::new(ceiling * 1.01 + 1e-9, 0.0, 1e6, 1e6).unwrap();
        prop_assert!(!is_achievable(&above, &q).unwrap().achievable);
        let below = RateTuple::new(0.99 * u * ceiling, 0.0, 1e6, 1e6).unwrap();
        prop_assert!(is_achievable(&below, &q).unwrap().achievable);
    }

    /// Plug-in discrete MI stays within its information-theoretic box.
    #[test]
    fn plugin_mi_bounds(pairs in prop::collection::vec((0..7usize, 0..5usize), 2..400)) {
        let mi = discrete_plugin_mi(&pairs).unwrap();
        prop_assert!(mi.value >= -1e-12, "negative MI {}", mi.value);
        prop_assert!(mi.value <= (5f64).ln() + 1e-12, "MI {} above alphabet cap", mi.value);
    }
}

/// The Gaussian MI estimator's reported standard error scales like
/// 1/sqrt(count) and brackets the truth at every sample size.
#[test]
fn gaussian_mi_error_decays_with_count() {
    let p = ChannelParams::new(0.75, 2.0 / 3.0).unwrap();
    let mut scaled = Vec::new();
    for (i, count) in [2_000usize, 8_000, 32_000, 128_000].iter().enumerate() {
        let block = &sample_forward(&p, *count, 1, 17 + i as u64)[0];
        let pairs: Vec<(f64, f64)> = block.iter().map(|s| (s.y, s.z)).collect();
        let est = gaussian_mi_from_samples(&pairs).unwrap();
        assert!(
            (bits(est.value) - 0.5).abs() <= 4.0 * bits(est.std_error),
            "count {count}: estimate {} bits off 0.5 by more than 4 se",
            bits(est.value)
        );
        scaled.push(est.std_error * (*count as f64).sqrt());
    }
    for w in scaled.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (0.7..1.3).contains(&ratio),
            "se * sqrt(count) drifted: {scaled:?}"
        );
    }
}
