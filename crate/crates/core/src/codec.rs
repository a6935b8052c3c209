//! Desk-scale executable version of the achievability scheme: random Gaussian
//! codebooks, weak-typicality enrollment, multi-user typicality
//! identification, and the one-time-pad layer of the chosen-secret model.
//!
//! Enrollment quantizes each user's Y-block to a codeword u^n(s, j) drawn
//! i.i.d. N(0, 1-alpha); the secret index s and helper index j partition the
//! codeword index. Identification searches every enrolled user's helper
//! column for a codeword jointly typical with the probe Z-block and succeeds
//! iff exactly one (user, s) matches. The chosen-secret model additionally
//! stores s_C masked by the generated index under addition mod M_S, so both
//! models share the same decoding geometry and succeed or fail together
//! trial by trial.
//!
//! Typicality is joint WEAK typicality: both marginal sample log-densities
//! and the joint one must sit within eps of their entropies. The scheme's
//! modified typical set (which additionally conditions on the enrollment
//! noise) is not directly computable; membership in it implies membership in
//! the weak-typical set used here, and the approximation is absorbed into the
//! calibrated eps (see [`calibrate_eps`]).
//!
//! Randomness is partitioned by purpose and trial: the codebook, each user's
//! source block, each user's enrollment tiebreak, and the probe draw come
//! from independent labeled streams that do not depend on the secrecy mode,
//! which is what couples the two models; chosen-secret keys use a separate
//! stream. Trials are scheduled with rayon but aggregate statistics are
//! collected in trial order, so results are independent of thread scheduling.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussmodel::{
    derive_rng, derive_seed, mi_yu, mi_zu, streams, AuxiliaryParams, ChannelParams,
};
use crate::mcverify::{discrete_plugin_entropy, discrete_plugin_mi, EstimateWithCI};
use crate::rate::RateBase;
use crate::region::SecretModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("block length must be >= 1")]
    BadBlockLength,
    #[error("typicality slack delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("identification rate must be >= 0, got {0}")]
    BadIdentificationRate(f64),
    #[error("identification rate {r_i:.6} nats must stay below I(Z;U) = {limit:.6} nats")]
    IdentificationRateTooHigh { r_i: f64, limit: f64 },
    #[error("derived secrecy rate {r_s:.6} nats is not positive; shrink delta or r_i, or use a smaller alpha")]
    SecrecyRateNonPositive { r_s: f64 },
    #[error("config needs about {required:.3e} sequence elements, cap is {cap}")]
    ConfigInfeasible { required: f64, cap: usize },
    #[error("pair law needs positive variances and a positive-definite covariance")]
    DegeneratePairLaw,
    #[error("calibration could not reach enrollment-failure frequency < {target} with eps <= {max_eps}")]
    CalibrationFailed { target: f64, max_eps: f64 },
}

/// Operating point of the codec. Rates are stored in nats; `base` only labels
/// how the configuration was expressed and how results should be displayed
/// (the derived sizes b^(n R) are base-invariant).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    n: usize,
    alpha: f64,
    delta: f64,
    r_i: f64,
    base: RateBase,
    element_cap: usize,
    m_s_override: Option<usize>,
}

/// Default cap on n * M_S * M_J, the number of stored codeword elements.
pub const DEFAULT_ELEMENT_CAP: usize = 1 << 26;

impl CodecConfig {
    /// `delta` and `r_i` in nats; see [`crate::rate::RateBase::to_nats`].
    pub fn new(
        n: usize,
        alpha: AuxiliaryParams,
        delta: f64,
        r_i: f64,
        base: RateBase,
    ) -> Result<Self, CodecError> {
        if n < 1 {
            return Err(CodecError::BadBlockLength);
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(CodecError::BadDelta(delta));
        }
        if !(r_i >= 0.0 && r_i.is_finite()) {
            return Err(CodecError::BadIdentificationRate(r_i));
        }
        Ok(Self {
            n,
            alpha: alpha.alpha(),
            delta,
            r_i,
            base,
            element_cap: DEFAULT_ELEMENT_CAP,
            m_s_override: None,
        })
    }

    pub fn with_element_cap(mut self, cap: usize) -> Self {
        self.element_cap = cap;
        self
    }

    /// Replaces the derived M_S, bypassing the secrecy-rate derivation but not
    /// the element cap. For stress-testing rates outside the admissible
    /// region; the rate-accounting guarantees do not hold under an override.
    pub fn with_m_s_override(mut self, m_s: usize) -> Self {
        self.m_s_override = Some(m_s.max(1));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> AuxiliaryParams {
        AuxiliaryParams::new(self.alpha).expect("validated at construction")
    }

    /// Typicality slack, nats.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Identification rate, nats.
    pub fn r_i(&self) -> f64 {
        self.r_i
    }

    pub fn base(&self) -> RateBase {
        self.base
    }

    pub fn element_cap(&self) -> usize {
        self.element_cap
    }

    pub fn m_s_override(&self) -> Option<usize> {
        self.m_s_override
    }

    /// Derives the index cardinalities from the rate settings
    /// R_S = I(Z;U) - R_I - 2 delta and R_J = I(Y;U) - I(Z;U) + R_I + 6 delta,
    /// with M = ceil(exp(n R)) each. Fails when R_I >= I(Z;U), when the
    /// derived R_S is not positive, or when n * M_S * M_J exceeds the element
    /// cap.
    pub fn sizes(&self, p: &ChannelParams) -> Result<CodeSizes, CodecError> {
        let izu = mi_zu(p, self.alpha());
        let iyu = mi_yu(self.alpha());
        if self.r_i >= izu {
            return Err(CodecError::IdentificationRateTooHigh {
                r_i: self.r_i,
                limit: izu,
            });
        }
        let r_s = izu - self.r_i - 2.0 * self.delta;
        if r_s <= 0.0 {
            return Err(CodecError::SecrecyRateNonPositive { r_s });
        }
        let r_j = iyu - izu + self.r_i + 6.0 * self.delta;
        let nf = self.n as f64;
        let count = |r: f64| (nf * r).exp().ceil();
        let (m_i_f, m_j_f) = (count(self.r_i), count(r_j));
        let m_s_f = match self.m_s_override {
            Some(m) => m as f64,
            None => count(r_s),
        };
        let required = nf * m_s_f * m_j_f;
        if !(required <= self.element_cap as f64) {
            return Err(CodecError::ConfigInfeasible {
                required,
                cap: self.element_cap,
            });
        }
        Ok(CodeSizes {
            m_i: m_i_f as usize,
            m_s: m_s_f as usize,
            m_j: m_j_f as usize,
            r_s,
            r_j,
            elements: required as usize,
        })
    }
}

/// Derived cardinalities and rates (nats) of a feasible config.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSizes {
    pub m_i: usize,
    pub m_s: usize,
    pub m_j: usize,
    /// Secrecy rate the sizes were derived from, nats.
    pub r_s: f64,
    /// Storage rate the sizes were derived from, nats.
    pub r_j: f64,
    /// n * m_s * m_j, the stored element count.
    pub elements: usize,
}

/// A zero-mean bivariate Gaussian law, the reference for typicality tests.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PairLaw {
    var_first: f64,
    var_second: f64,
    cov: f64,
}

impl PairLaw {
    pub fn new(var_first: f64, var_second: f64, cov: f64) -> Result<Self, CodecError> {
        let det = var_first * var_second - cov * cov;
        if !(var_first > 0.0 && var_second > 0.0 && det > 0.0) {
            return Err(CodecError::DegeneratePairLaw);
        }
        Ok(Self {
            var_first,
            var_second,
            cov,
        })
    }

    /// Law of (Y, U): var(Y) = 1, var(U) = cov(Y, U) = 1 - alpha.
    /// Degenerate at alpha = 1 (U vanishes).
    pub fn enrollment(a: AuxiliaryParams) -> Result<Self, CodecError> {
        Self::new(1.0, 1.0 - a.alpha(), 1.0 - a.alpha())
    }

    /// Law of (Z, U): var(Z) = 1, var(U) = 1 - alpha,
    /// cov(Z, U) = rho1*rho2*(1 - alpha).
    pub fn identification(p: &ChannelParams, a: AuxiliaryParams) -> Result<Self, CodecError> {
        Self::new(1.0, 1.0 - a.alpha(), p.rho1() * p.rho2() * (1.0 - a.alpha()))
    }

    /// The three typicality deviations from second-moment statistics: for a
    /// Gaussian law, -(1/n) sum ln f(x) - h equals (mean(x^2)/var - 1)/2 per
    /// marginal and (mean quadratic form - 2)/2 jointly, so only mean(a^2),
    /// mean(b^2), mean(a*b) are needed.
    fn devs_from_moments(&self, ma2: f64, mb2: f64, mab: f64) -> (f64, f64, f64) {
        let det = self.var_first * self.var_second - self.cov * self.cov;
        let q = (self.var_second * ma2 - 2.0 * self.cov * mab + self.var_first * mb2) / det;
        (
            0.5 * (ma2 / self.var_first - 1.0).abs(),
            0.5 * (mb2 / self.var_second - 1.0).abs(),
            0.5 * (q - 2.0).abs(),
        )
    }
}

fn pair_moments(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (mut ma2, mut mb2, mut mab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        ma2 += x * x;
        mb2 += y * y;
        mab += x * y;
    }
    (ma2 / n, mb2 / n, mab / n)
}

/// Largest of the three typicality deviations of (a, b) under `law`: the
/// smallest eps at which [`is_jointly_typical`] would accept the pair.
pub fn typicality_deviation(a: &[f64], b: &[f64], law: &PairLaw) -> f64 {
    let (ma2, mb2, mab) = pair_moments(a, b);
    let (d1, d2, dj) = law.devs_from_moments(ma2, mb2, mab);
    d1.max(d2).max(dj)
}

/// Joint weak typicality: true iff the sample log-density of each marginal
/// AND of the joint law sit within eps of the corresponding differential
/// entropy.
pub fn is_jointly_typical(a: &[f64], b: &[f64], law: &PairLaw, eps: f64) -> bool {
    assert_eq!(a.len(), b.len(), "blocks must have equal length");
    assert!(eps > 0.0, "eps must be positive");
    typicality_deviation(a, b, law) <= eps
}

/// Immutable codeword store: M_S * M_J sequences of length n, each drawn
/// i.i.d. N(0, gen_variance), laid out j-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    n: usize,
    m_s: usize,
    m_j: usize,
    gen_variance: f64,
    words: Vec<f64>,
}

impl Codebook {
    /// Codeword for 1-based indices (s, j).
    pub fn word(&self, s: usize, j: usize) -> &[f64] {
        debug_assert!((1..=self.m_s).contains(&s) && (1..=self.m_j).contains(&j));
        let start = ((s - 1) * self.m_j + (j - 1)) * self.n;
        &self.words[start..start + self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_s(&self) -> usize {
        self.m_s
    }

    pub fn m_j(&self) -> usize {
        self.m_j
    }

    pub fn gen_variance(&self) -> f64 {
        self.gen_variance
    }

    /// All stored elements, row-major; exposed for moment checks.
    pub fn elements(&self) -> &[f64] {
        &self.words
    }
}

/// Draws the full codebook for the config: entries for every (s, j) index
/// pair, in s-major order, from the stream (seed, CODEBOOK). Deterministic
/// under seed.
pub fn build_codebook(
    p: &ChannelParams,
    c: &CodecConfig,
    seed: u64,
) -> Result<Codebook, CodecError> {
    let sizes = c.sizes(p)?;
    let sd = (1.0 - c.alpha().alpha()).sqrt();
    let mut rng = derive_rng(seed, &[streams::CODEBOOK]);
    let words = (0..sizes.elements)
        .map(|_| sd * normal(&mut rng))
        .collect();
    Ok(Codebook {
        n: c.n(),
        m_s: sizes.m_s,
        m_j: sizes.m_j,
        gen_variance: 1.0 - c.alpha().alpha(),
        words,
    })
}

fn normal(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Enrollment result; failure to find a typical codeword is a value (the
/// encoder declares an error), not a fault.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnrollOutcome {
    Enrolled { s: usize, j: usize },
    NoTypicalPair,
}

/// Scans ALL (s, j) codewords, collects every one jointly typical with
/// `y_block` under `law`, and returns one uniformly at random; any typical
/// pair is valid, and randomizing avoids index bias. `NoTypicalPair` if none.
pub fn enroll(
    y_block: &[f64],
    cb: &Codebook,
    law: &PairLaw,
    eps: f64,
    rng: &mut ChaCha12Rng,
) -> EnrollOutcome {
    assert_eq!(y_block.len(), cb.n(), "block length must match codebook");
    assert!(eps > 0.0);
    let nf = cb.n() as f64;
    let ma2 = y_block.iter().map(|v| v * v).sum::<f64>() / nf;
    let mut candidates = Vec::new();
    for s in 1..=cb.m_s() {
        for j in 1..=cb.m_j() {
            let word = cb.word(s, j);
            let (mut mb2, mut mab) = (0.0, 0.0);
            for (&y, &u) in y_block.iter().zip(word) {
                mb2 += u * u;
                mab += y * u;
            }
            let (d1, d2, dj) = law.devs_from_moments(ma2, mb2 / nf, mab / nf);
            if d1 <= eps && d2 <= eps && dj <= eps {
                candidates.push((s, j));
            }
        }
    }
    if candidates.is_empty() {
        EnrollOutcome::NoTypicalPair
    } else {
        let pick = rng.random_range(0..candidates.len());
        let (s, j) = candidates[pick];
        EnrollOutcome::Enrolled { s, j }
    }
}

/// What the database stores per user: the helper index, plus the masked
/// secret in the chosen-secret model. A chosen-secret record is exactly
/// (j_G, mask(s_C, s_G, M_S)).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperRecord {
    pub generated: usize,
    pub masked_key: Option<usize>,
}

/// Identification result; both failure kinds are values.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdentifyOutcome {
    Identified { user: usize, s: usize },
    NoMatch,
    Ambiguous { matches: usize },
}

/// All (user, s) pairs whose stored codeword u^n(s, j(user)) is jointly
/// typical with the probe, in scan order.
fn scan_matches(
    z_block: &[f64],
    helper_db: &[HelperRecord],
    cb: &Codebook,
    law: &PairLaw,
    eps: f64,
) -> Vec<(usize, usize)> {
    let nf = cb.n() as f64;
    let ma2 = z_block.iter().map(|v| v * v).sum::<f64>() / nf;
    let mut matches = Vec::new();
    for (idx, rec) in helper_db.iter().enumerate() {
        for s in 1..=cb.m_s() {
            let word = cb.word(s, rec.generated);
            let (mut mb2, mut mab) = (0.0, 0.0);
            for (&z, &u) in z_block.iter().zip(word) {
                mb2 += u * u;
                mab += z * u;
            }
            let (d1, d2, dj) = law.devs_from_moments(ma2, mb2 / nf, mab / nf);
            if d1 <= eps && d2 <= eps && dj <= eps {
                matches.push((idx + 1, s));
            }
        }
    }
    matches
}

/// Searches every enrolled user's helper column for codewords jointly typical
/// with the probe under `law`; identifies iff EXACTLY one (user, s) matches.
/// The scan collects all matches before deciding (no first-match shortcut),
/// since ambiguity is a distinct outcome.
pub fn identify(
    z_block: &[f64],
    helper_db: &[HelperRecord],
    cb: &Codebook,
    law: &PairLaw,
    eps: f64,
) -> IdentifyOutcome {
    assert!(!helper_db.is_empty(), "helper database must be nonempty");
    assert_eq!(z_block.len(), cb.n());
    assert!(eps > 0.0);
    for rec in helper_db {
        assert!(
            (1..=cb.m_j()).contains(&rec.generated),
            "helper index out of range"
        );
    }
    let matches = scan_matches(z_block, helper_db, cb, law, eps);
    match matches.as_slice() {
        [] => IdentifyOutcome::NoMatch,
        &[(user, s)] => IdentifyOutcome::Identified { user, s },
        many => IdentifyOutcome::Ambiguous {
            matches: many.len(),
        },
    }
}

/// One-time-pad layer, 1-based indices: mask(s_c, s_g) = ((s_c-1 + s_g-1)
/// mod m_s) + 1. With s_g uniform and independent of s_c the output is
/// uniform and independent of s_c. s_g = 1 is the identity.
pub fn mask(s_c: usize, s_g: usize, m_s: usize) -> usize {
    assert!((1..=m_s).contains(&s_c) && (1..=m_s).contains(&s_g));
    ((s_c - 1 + s_g - 1) % m_s) + 1
}

/// Inverse of [`mask`] in its first argument: unmask(mask(s_c, s_g), s_g) =
/// s_c.
pub fn unmask(masked: usize, s_g: usize, m_s: usize) -> usize {
    assert!((1..=m_s).contains(&masked) && (1..=m_s).contains(&s_g));
    ((masked - 1 + m_s - (s_g - 1)) % m_s) + 1
}

/// Per-trial outcome for the probed user.
///
/// Flag semantics: `e1` = the probed user's enrollment failed (then
/// `enrolled` and `decoded` are None and the trial counts as an error);
/// `e2` = the probed user's own (user, s) pair was NOT among the typicality
/// matches (a miss); `e3` = some OTHER (user, s) pair matched (a false
/// alarm); `e4` = the final decision differs from (user, key), which is the
/// event the reported error probability counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// The probed user W (1-based).
    pub user: usize,
    /// (key, j) of the probed user: (s_G, j_G) in generated mode,
    /// (s_C, j_G) in chosen mode; None on enrollment failure.
    pub enrolled: Option<(usize, usize)>,
    /// The probed user's stored database record.
    pub helper: HelperRecord,
    /// Decoder output (user, key), after unmasking in chosen mode; None when
    /// no unique match.
    pub decoded: Option<(usize, usize)>,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e4: bool,
}

/// Experiment-level knobs, separate from the codec operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: SecretModel,
    /// Number of enrolled users; plays the role of M_I for the decoder.
    pub users: usize,
    pub trials: usize,
    pub seed: u64,
    /// Typicality slack; see [`calibrate_eps`].
    pub eps: f64,
    /// Fresh codebook per trial (required for the key-helper MI estimate to
    /// target the designed quantity) or one codebook shared by all trials.
    pub fresh_codebook: bool,
    /// Keep per-trial records in the result.
    pub record_trials: bool,
    /// Per-user RNG stream labels, defaulting to 1..=users. Permuting the
    /// labels permutes which randomness each user index receives, which is
    /// how the exchangeability property is tested.
    pub user_labels: Option<Vec<u64>>,
}

/// Aggregate experiment outcome. `key_entropy` and `key_helper_mi` are in
/// nats, computed over the probed user of each trial that enrolled
/// successfully; `key_helper_mi` estimates I(key; stored record) and is None
/// when fewer than two such trials exist. With a shared codebook the MI
/// estimate mixes dependence across trials and no longer targets the designed
/// per-codebook quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub trials: usize,
    pub users: usize,
    /// Pr{decoded != (user, key)}, over all trials (enrollment failures
    /// count as errors).
    pub error_probability: f64,
    /// Frequencies of e1..e4 over all trials.
    pub e_frequencies: [f64; 4],
    /// Plug-in entropy of the probed keys, nats.
    pub key_entropy: f64,
    pub key_helper_mi: Option<EstimateWithCI>,
    /// Enrollment failures per user index, summed over trials.
    pub enroll_failures_by_user: Vec<usize>,
    pub records: Option<Vec<TrialRecord>>,
}

struct TrialOutput {
    record: TrialRecord,
    /// (key, record-label) for the plug-in MI, present when the probed user
    /// enrolled.
    mi_pair: Option<(usize, usize)>,
    enroll_failed: Vec<bool>,
}

/// Runs `trials` independent enroll-probe-identify rounds and aggregates.
///
/// Per trial: enroll `users` fresh Y-blocks (storing a helper record per
/// user; an enrollment failure stores the (s, j) = (1, 1) convention), pick a
/// probe user W uniformly, send that user's Y-block through the composite
/// channel Z = rho1 rho2 Y + N(0, 1 - rho1^2 rho2^2), identify, and in chosen
/// mode unmask the decoded secret with the decoded user's stored record.
///
/// The source, tiebreak, and probe streams depend only on (seed, trial, user
/// label), NOT on the mode, so generated- and chosen-secret runs with equal
/// seeds couple: they succeed or fail on exactly the same trials.
pub fn run_experiment(
    p: &ChannelParams,
    c: &CodecConfig,
    e: &ExperimentConfig,
) -> Result<ExperimentStats, CodecError> {
    assert!(e.users >= 1 && e.trials >= 1);
    if let Some(labels) = &e.user_labels {
        assert_eq!(labels.len(), e.users, "one label per user");
    }
    let sizes = c.sizes(p)?;
    let law_enroll = PairLaw::enrollment(c.alpha())?;
    let law_ident = PairLaw::identification(p, c.alpha())?;
    let shared_cb = if e.fresh_codebook {
        None
    } else {
        Some(build_codebook(p, c, derive_seed(e.seed, &[streams::CODEBOOK]))?)
    };
    let default_labels: Vec<u64> = (1..=e.users as u64).collect();
    let labels = e.user_labels.as_deref().unwrap_or(&default_labels);

    let outputs: Vec<TrialOutput> = (0..e.trials as u64)
        .into_par_iter()
        .map(|t| {
            let cb = match &shared_cb {
                Some(cb) => cb,
                None => &build_codebook(p, c, derive_seed(e.seed, &[streams::CODEBOOK, t]))
                    .expect("sizes validated above"),
            };
            run_trial(p, c, e, &sizes, cb, &law_enroll, &law_ident, labels, t)
        })
        .collect();

    let trials_f = e.trials as f64;
    let mut e_counts = [0usize; 4];
    let mut mi_pairs = Vec::new();
    let mut keys = Vec::new();
    let mut enroll_failures_by_user = vec![0usize; e.users];
    for out in &outputs {
        for (flag, count) in [
            out.record.e1,
            out.record.e2,
            out.record.e3,
            out.record.e4,
        ]
        .iter()
        .zip(&mut e_counts)
        {
            *count += *flag as usize;
        }
        if let Some(pair) = out.mi_pair {
            mi_pairs.push(pair);
            keys.push(pair.0);
        }
        for (user, &failed) in out.enroll_failed.iter().enumerate() {
            enroll_failures_by_user[user] += failed as usize;
        }
    }
    Ok(ExperimentStats {
        trials: e.trials,
        users: e.users,
        error_probability: e_counts[3] as f64 / trials_f,
        e_frequencies: e_counts.map(|c| c as f64 / trials_f),
        key_entropy: discrete_plugin_entropy(&keys),
        key_helper_mi: discrete_plugin_mi(&mi_pairs).ok(),
        enroll_failures_by_user,
        records: e
            .record_trials
            .then(|| outputs.into_iter().map(|o| o.record).collect()),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    p: &ChannelParams,
    c: &CodecConfig,
    e: &ExperimentConfig,
    sizes: &CodeSizes,
    cb: &Codebook,
    law_enroll: &PairLaw,
    law_ident: &PairLaw,
    labels: &[u64],
    t: u64,
) -> TrialOutput {
    let n = c.n();
    let chosen = e.mode == SecretModel::ChosenSecret;
    let mut helpers = Vec::with_capacity(e.users);
    let mut gen_pairs: Vec<Option<(usize, usize)>> = Vec::with_capacity(e.users);
    let mut chosen_keys: Vec<usize> = Vec::with_capacity(e.users);
    let mut enroll_failed = vec![false; e.users];
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(e.users);
    for (idx, &label) in labels.iter().enumerate() {
        let mut src = derive_rng(e.seed, &[streams::SOURCE, t, label]);
        let y: Vec<f64> = (0..n).map(|_| normal(&mut src)).collect();
        let mut tie = derive_rng(e.seed, &[streams::TIEBREAK, t, label]);
        let outcome = enroll(&y, cb, law_enroll, e.eps, &mut tie);
        let (s_g, j_g) = match outcome {
            EnrollOutcome::Enrolled { s, j } => {
                gen_pairs.push(Some((s, j)));
                (s, j)
            }
            EnrollOutcome::NoTypicalPair => {
                enroll_failed[idx] = true;
                gen_pairs.push(None);
                (1, 1)
            }
        };
        let masked = if chosen {
            let mut key_rng = derive_rng(e.seed, &[streams::KEY, t, label]);
            let s_c = key_rng.random_range(1..=sizes.m_s);
            chosen_keys.push(s_c);
            Some(mask(s_c, s_g, sizes.m_s))
        } else {
            chosen_keys.push(0);
            None
        };
        helpers.push(HelperRecord {
            generated: j_g,
            masked_key: masked,
        });
        ys.push(y);
    }

    let mut probe = derive_rng(e.seed, &[streams::PROBE, t]);
    let w = probe.random_range(1..=e.users);
    let cc = p.rho1() * p.rho2();
    let noise_sd = (1.0 - cc * cc).sqrt();
    let z: Vec<f64> = ys[w - 1]
        .iter()
        .map(|&y| cc * y + noise_sd * normal(&mut probe))
        .collect();

    let helper_w = helpers[w - 1];
    let (enrolled, decoded, flags, mi_pair);
    match gen_pairs[w - 1] {
        None => {
            // Enrollment failure of the probed user: the encoder has declared
            // an error; the decoder's output cannot be right.
            enrolled = None;
            decoded = None;
            flags = (true, false, false, true);
            mi_pair = None;
        }
        Some((s_g, j_g)) => {
            let matches = scan_matches(&z, &helpers, cb, law_ident, e.eps);
            let truth = (w, s_g);
            let e2 = !matches.contains(&truth);
            let e3 = matches.iter().any(|&m| m != truth);
            let unique = (matches.len() == 1).then(|| matches[0]);
            let (key, label_for_mi) = if chosen {
                let masked = helper_w.masked_key.expect("chosen helpers carry a mask");
                (
                    chosen_keys[w - 1],
                    // Joint label of the full stored record (j_G, masked).
                    (masked - 1) * cb.m_j() + (j_g - 1),
                )
            } else {
                (s_g, j_g)
            };
            decoded = unique.map(|(user, s_hat)| {
                let key_hat = if chosen {
                    let masked = helpers[user - 1]
                        .masked_key
                        .expect("chosen helpers carry a mask");
                    unmask(masked, s_hat, sizes.m_s)
                } else {
                    s_hat
                };
                (user, key_hat)
            });
            let e4 = decoded != Some((w, key));
            enrolled = Some((key, j_g));
            flags = (false, e2, e3, e4);
            mi_pair = Some((key, label_for_mi));
        }
    }
    let (e1, e2, e3, e4) = flags;
    TrialOutput {
        record: TrialRecord {
            user: w,
            enrolled,
            helper: helper_w,
            decoded,
            e1,
            e2,
            e3,
            e4,
        },
        mi_pair,
        enroll_failed,
    }
}

/// Picks the smallest eps on a 0.05 grid whose enrollment-failure frequency
/// over `trials` seeded calibration rounds is below 0.2.
///
/// Each round draws a fresh codebook and a fresh Y-block from CALIBRATION
/// streams and records the smallest eps that would have enrolled it (the
/// minimum over codewords of the largest typicality deviation); the grid scan
/// then reads failure frequencies off this sample. Deterministic under seed.
pub fn calibrate_eps(
    p: &ChannelParams,
    c: &CodecConfig,
    trials: usize,
    seed: u64,
) -> Result<f64, CodecError> {
    assert!(trials >= 1);
    const TARGET: f64 = 0.2;
    const MAX_EPS: f64 = 5.0;
    c.sizes(p)?;
    let law = PairLaw::enrollment(c.alpha())?;
    let n = c.n();
    let needed: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let cb = build_codebook(p, c, derive_seed(seed, &[streams::CALIBRATION, t]))
                .expect("sizes validated above");
            let mut src = derive_rng(seed, &[streams::CALIBRATION, t, 1]);
            let y: Vec<f64> = (0..n).map(|_| normal(&mut src)).collect();
            let mut best = f64::INFINITY;
            for s in 1..=cb.m_s() {
                for j in 1..=cb.m_j() {
                    best = best.min(typicality_deviation(&y, cb.word(s, j), &law));
                }
            }
            best
        })
        .collect();
    let mut step = 1;
    loop {
        // k/20 rather than k*0.05: division lands on the representable
        // nearest of each grid value, so reported eps prints cleanly.
        let eps = step as f64 / 20.0;
        if eps > MAX_EPS {
            break;
        }
        let failures = needed.iter().filter(|&&d| d > eps).count();
        if (failures as f64 / trials as f64) < TARGET {
            return Ok(eps);
        }
        step += 1;
    }
    Err(CodecError::CalibrationFailed {
        target: TARGET,
        max_eps: MAX_EPS,
    })
}
