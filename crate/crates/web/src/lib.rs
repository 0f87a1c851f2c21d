//! Browser bindings: three small computations on the one-dimensional
//! reaction–diffusion model, each returning a JSON string for the demo page.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use spdelab_core::estimators::ou_truncation_error;
use spdelab_core::{
    convergence_study, GalerkinState, McSettings, NoiseStream, ReactionDiffusionModel, RectDomain,
    Result, ScalarFunctionSpec, Scheme, SchemeConfig, Simulator,
};

/// `ψ = psi_a·arctan`, `φ = 1 + phi_amp·sin` on the unit interval.
fn model(psi_a: f64, phi_amp: f64, alpha: f64, n: usize) -> Result<ReactionDiffusionModel> {
    ReactionDiffusionModel::new(
        RectDomain::unit_interval(),
        alpha,
        ScalarFunctionSpec::atan_scaled(psi_a),
        ScalarFunctionSpec::sin_perturbed(1.0, phi_amp, 1.0),
        n,
        None,
    )
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Serialize)]
pub struct ConstantCurves {
    pub t0: Option<f64>,
    pub lambda_sigma: f64,
    pub t: Vec<f64>,
    pub gradient: Vec<f64>,
    pub logharnack: Vec<Option<f64>>,
    pub poincare: Vec<f64>,
}

pub fn constant_curves(
    psi_a: f64,
    phi_amp: f64,
    alpha: f64,
    t_max: f64,
    points: usize,
) -> Result<ConstantCurves> {
    let profile = model(psi_a, phi_amp, alpha, 1)?.profile()?;
    let bar = profile.lambda_bar_sigma.unwrap_or(f64::NAN);
    let points = points.max(2);
    let t: Vec<f64> = (1..=points)
        .map(|i| t_max * i as f64 / points as f64)
        .collect();
    let mut out = ConstantCurves {
        t0: finite(profile.t0.as_f64()),
        lambda_sigma: profile.lambda_sigma,
        t: t.clone(),
        gradient: Vec::with_capacity(points),
        logharnack: Vec::with_capacity(points),
        poincare: Vec::with_capacity(points),
    };
    for &s in &t {
        out.gradient.push(profile.gradient_constant(s));
        out.logharnack.push(profile.logharnack_constant(s).ok());
        out.poincare
            .push(spdelab_core::regularity::poincare_constant(
                s, profile.t0, bar,
            )?);
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Serialize)]
pub struct FieldPath {
    pub xi: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

/// One path from `u₀ = u0_amp·e₁`, sampled at `frames` equispaced times in
/// `[0, t_end]`.
#[allow(clippy::too_many_arguments)]
pub fn field_path(
    psi_a: f64,
    phi_amp: f64,
    alpha: f64,
    n: usize,
    u0_amp: f64,
    t_end: f64,
    frames: usize,
    seed: u64,
    points: usize,
) -> Result<FieldPath> {
    let m = model(psi_a, phi_amp, alpha, n)?;
    let sys = m.system()?;
    let cfg = SchemeConfig::with_default_dt(Scheme::ExponentialEuler, t_end, &sys.spectrum)?;
    let sim = Simulator::new(&sys.spectrum, &sys.coeffs, cfg, NoiseStream::new(seed))?;
    let steps = sim.grid().steps;
    let frames = frames.max(2);
    let mut at: Vec<usize> = (0..frames).map(|i| i * steps / (frames - 1)).collect();
    at.dedup();
    let x0 = GalerkinState::unit(n, 0).scaled(u0_amp);
    let states = sim.simulate_checkpoints(&x0, 0, &at)?;
    let mut xi = Vec::new();
    let mut snapshots = Vec::with_capacity(states.len());
    for (&k, x) in at.iter().zip(&states) {
        let field = m.field_on_grid(&sys.spectrum, x, points)?;
        if xi.is_empty() {
            xi = field.iter().map(|(p, _)| p[0]).collect();
        }
        snapshots.push(Snapshot {
            t: k as f64 * sim.grid().dt,
            u: field.into_iter().map(|(_, u)| u).collect(),
        });
    }
    Ok(FieldPath { xi, snapshots })
}

#[derive(Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
    pub exact: f64,
}

/// Truncation error of the heat equation with additive noise against the
/// `n_max`-mode reference, with the closed-form tail sum alongside.
pub fn ou_convergence(
    n_max: usize,
    paths: usize,
    t: f64,
    seed: u64,
) -> Result<Vec<ConvergencePoint>> {
    let ou = ReactionDiffusionModel::ornstein_uhlenbeck(1.0, n_max);
    let n_list: Vec<usize> = (0..)
        .map(|k| 1usize << k)
        .take_while(|&n| n < n_max)
        .collect();
    let x0 = GalerkinState::zeros(n_max);
    let rows = convergence_study(
        |n| ou.with_modes(n)?.system().map(|s| (s.spectrum, s.coeffs)),
        n_max,
        &n_list,
        &x0,
        t,
        McSettings::new(paths, seed),
    )?;
    let lambdas = ou.spectrum()?.lambdas().to_vec();
    Ok(rows
        .into_iter()
        .map(|r| ConvergencePoint {
            n: r.n,
            error: r.error,
            stderr: r.stderr,
            exact: ou_truncation_error(x0.coeffs(), &lambdas, r.n, t, 1.0),
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = constantCurves)]
pub fn constant_curves_js(
    psi_a: f64,
    phi_amp: f64,
    alpha: f64,
    t_max: f64,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(constant_curves(psi_a, phi_amp, alpha, t_max, points))
}

#[wasm_bindgen(js_name = fieldPath)]
#[allow(clippy::too_many_arguments)]
pub fn field_path_js(
    psi_a: f64,
    phi_amp: f64,
    alpha: f64,
    n: usize,
    u0_amp: f64,
    t_end: f64,
    frames: usize,
    seed: u64,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(field_path(
        psi_a, phi_amp, alpha, n, u0_amp, t_end, frames, seed, points,
    ))
}

#[wasm_bindgen(js_name = ouConvergence)]
pub fn ou_convergence_js(
    n_max: usize,
    paths: usize,
    t: f64,
    seed: u64,
) -> std::result::Result<String, JsError> {
    to_js(ou_convergence(n_max, paths, t, seed))
}
