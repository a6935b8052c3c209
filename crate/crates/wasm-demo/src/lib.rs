//! Browser bindings over the bislab region calculators. Each exported
//! operation takes plain numbers and strings and returns a JSON string, so
//! the page needs no generated TypeScript glue beyond the wasm-bindgen
//! loader. All rates cross this boundary in bits.
//!
//! The `wasm_bindgen` wrappers delegate to plain-Rust functions returning
//! `Result<String, String>`; the unit tests call those directly, so the
//! crate is tested natively without a wasm toolchain.

use bislab::gaussmodel::{mi_xy, mi_zy, AuxiliaryParams, ChannelParams};
use bislab::rate::bits;
use bislab::ratefuncs::{
    leakage_limit, leakage_slope, secrecy_limit, secrecy_slope,
};
use bislab::region::{
    boundary_trace, is_achievable, leakage_bound, storage_bound, sum_rate_bound, RateTuple,
    RegionForm, RegionQuery, SecretModel, TracePlane,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const BITS: f64 = std::f64::consts::LN_2;

fn channel(rho1_sq: f64, rho2_sq: f64) -> Result<ChannelParams, String> {
    ChannelParams::new(rho1_sq, rho2_sq).map_err(|e| e.to_string())
}

fn model(name: &str) -> Result<SecretModel, String> {
    match name {
        "generated" => Ok(SecretModel::GeneratedSecret),
        "chosen" => Ok(SecretModel::ChosenSecret),
        other => Err(format!("unknown model {other:?}; use generated or chosen")),
    }
}

fn to_json<T: Serialize>(doc: &T) -> Result<String, String> {
    serde_json::to_string(doc).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TracePoint {
    alpha: f64,
    r_j: f64,
    value: f64,
}

#[derive(Serialize)]
struct TraceDoc {
    plane: String,
    model: String,
    base: &'static str,
    r_i: f64,
    points: Vec<TracePoint>,
}

/// Boundary polyline of the (R_J, R_S) or (R_J, R_L) projection at fixed
/// identification rate, all rates in bits.
pub fn trace_projection_impl(
    rho1_sq: f64,
    rho2_sq: f64,
    r_i_bits: f64,
    plane: &str,
    model_name: &str,
    grid: usize,
) -> Result<String, String> {
    if !(2..=100_000).contains(&grid) {
        return Err(format!("grid {grid} out of range 2..=100000"));
    }
    if !(r_i_bits >= 0.0) {
        return Err(format!("r_i {r_i_bits} must be >= 0"));
    }
    let tp = match plane {
        "rj-rs" => TracePlane::RjRs,
        "rj-rl" => TracePlane::RjRl,
        other => return Err(format!("unknown plane {other:?}; use rj-rs or rj-rl")),
    };
    let p = channel(rho1_sq, rho2_sq)?;
    let q = RegionQuery::new(model(model_name)?, RegionForm::Scaled(p), 1e-9)
        .map_err(|e| e.to_string())?;
    let points = boundary_trace(&q, r_i_bits * BITS, tp, grid)
        .into_iter()
        .map(|(alpha, r_j, value)| TracePoint {
            alpha,
            r_j: bits(r_j),
            value: bits(value),
        })
        .collect();
    to_json(&TraceDoc {
        plane: plane.to_string(),
        model: model_name.to_string(),
        base: "bits",
        r_i: r_i_bits,
        points,
    })
}

#[derive(Serialize)]
struct BoundsDoc {
    sum_rate: f64,
    storage: f64,
    leakage: f64,
}

#[derive(Serialize)]
struct MembershipDoc {
    achievable: bool,
    boundary: bool,
    witness_alpha: Option<f64>,
    /// Bounds at the witness, in bits; None when not achievable.
    bounds: Option<BoundsDoc>,
}

/// Membership verdict for a rate tuple given in bits.
pub fn membership_impl(
    rho1_sq: f64,
    rho2_sq: f64,
    model_name: &str,
    r_i_bits: f64,
    r_s_bits: f64,
    r_j_bits: f64,
    r_l_bits: f64,
) -> Result<String, String> {
    let p = channel(rho1_sq, rho2_sq)?;
    let q = RegionQuery::new(model(model_name)?, RegionForm::Scaled(p), 1e-9)
        .map_err(|e| e.to_string())?;
    let t = RateTuple::new(
        r_i_bits * BITS,
        r_s_bits * BITS,
        r_j_bits * BITS,
        r_l_bits * BITS,
    )
    .map_err(|e| e.to_string())?;
    let verdict = is_achievable(&t, &q).map_err(|e| e.to_string())?;
    let bounds = verdict.witness.map(|w| {
        let a = AuxiliaryParams::new(w).expect("witness is a valid alpha");
        BoundsDoc {
            sum_rate: bits(sum_rate_bound(&p, a)),
            storage: bits(storage_bound(q.model(), &p, a, t.r_i())),
            leakage: bits(leakage_bound(&p, a, t.r_i())),
        }
    });
    to_json(&MembershipDoc {
        achievable: verdict.achievable,
        boundary: verdict.boundary,
        witness_alpha: verdict.witness,
        bounds,
    })
}

#[derive(Serialize)]
struct LimitsDoc {
    /// None when enrollment is noiseless (the quantity diverges).
    mi_xy: Option<f64>,
    mi_zy: f64,
    secrecy_limit: f64,
    leakage_limit: f64,
    secrecy_slope: f64,
    leakage_slope: f64,
}

/// Large-storage limits (bits) and zero-storage slopes (dimensionless) of
/// the secrecy and leakage trade-offs.
pub fn limit_summary_impl(rho1_sq: f64, rho2_sq: f64) -> Result<String, String> {
    let p = channel(rho1_sq, rho2_sq)?;
    let ixy = mi_xy(&p);
    to_json(&LimitsDoc {
        mi_xy: ixy.is_finite().then(|| bits(ixy)),
        mi_zy: bits(mi_zy(&p)),
        secrecy_limit: bits(secrecy_limit(&p)),
        leakage_limit: bits(leakage_limit(&p)),
        secrecy_slope: secrecy_slope(&p),
        leakage_slope: leakage_slope(&p),
    })
}

#[wasm_bindgen]
pub fn trace_projection(
    rho1_sq: f64,
    rho2_sq: f64,
    r_i_bits: f64,
    plane: &str,
    model_name: &str,
    grid: usize,
) -> Result<String, JsError> {
    trace_projection_impl(rho1_sq, rho2_sq, r_i_bits, plane, model_name, grid)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn membership(
    rho1_sq: f64,
    rho2_sq: f64,
    model_name: &str,
    r_i_bits: f64,
    r_s_bits: f64,
    r_j_bits: f64,
    r_l_bits: f64,
) -> Result<String, JsError> {
    membership_impl(rho1_sq, rho2_sq, model_name, r_i_bits, r_s_bits, r_j_bits, r_l_bits)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn limit_summary(rho1_sq: f64, rho2_sq: f64) -> Result<String, JsError> {
    limit_summary_impl(rho1_sq, rho2_sq).map_err(|e| JsError::new(&e))
}
