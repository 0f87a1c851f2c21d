//! Regularity kernels `K_b`, `K_σ`, their time integrals, the critical time
//! `t₀`, and the constants of the gradient, log-Harnack and Poincaré bounds.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};
use statrs::function::gamma::{gamma, gamma_li};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, hurwitz_zeta, power_exp_tail, power_tail};
use crate::spectral::RectDomain;

/// Default absolute truncation tolerance for kernel series.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Level that `φ_b + φ_σ` may not exceed before `t₀`.
pub const CRITICAL_LEVEL: f64 = 1.0 / 6.0;

const T0_TOL: f64 = 1e-12;
const T0_HORIZON: f64 = 1e9;
const MAX_SHELLS: usize = 20_000_000;

/// Rate·time beyond which `e^{−r t}` is negligible against 1 (`e^{−40} ≈ 4e−18`).
const ASYMPTOTIC_RATE: f64 = 40.0;

/// Functional form of a regularity kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelForm {
    /// `K(t) ≡ value`. A Lipschitz bound `c` gives `value = c²`.
    Constant { value: f64 },
    /// `C Σ_m e^{−δ t m^p}`.
    SeriesKb {
        coefficient: f64,
        decay: f64,
        exponent: f64,
    },
    /// `C Σ_m m e^{−δ t m^p}`.
    SeriesKa {
        coefficient: f64,
        decay: f64,
        exponent: f64,
    },
    /// Finite explicit series `Σ_m w_m e^{−r_m t}`.
    ModeList { weights: Vec<f64>, rates: Vec<f64> },
    /// Infinite explicit series `Σ_m w e^{−κ λ_m t}` over every Dirichlet mode
    /// of `(−Δ)^α` on a rectangle.
    RectangleModes {
        weight: f64,
        domain: RectDomain,
        alpha: f64,
        rate_factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub form: KernelForm,
    pub truncation_tol: f64,
}

/// Outcome of testing `∫₀¹ s^{−ε} K(s) ds < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsIntegrability {
    pub finite: bool,
    pub value: f64,
}

/// Shell `k` of a series has total weight at most `c k^q` and every rate in it
/// is at least `delta k^p`.
#[derive(Debug, Clone, Copy)]
struct Envelope {
    c: f64,
    q: f64,
    p: f64,
    delta: f64,
}

#[derive(Clone, Copy)]
enum Summand {
    Kernel(f64),
    Phi(f64),
    PhiInfinity,
    EpsMoment(f64),
}

impl Summand {
    fn term(self, w: f64, r: f64) -> f64 {
        match self {
            Summand::Kernel(t) => w * (-r * t).exp(),
            Summand::Phi(t) => {
                if r > 0.0 {
                    w * -(-r * t).exp_m1() / r
                } else {
                    w * t
                }
            }
            Summand::PhiInfinity => {
                if r > 0.0 {
                    w / r
                } else if w > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Summand::EpsMoment(eps) => {
                let a = 1.0 - eps;
                if r > 0.0 {
                    w * r.powf(-a) * gamma_li(a, r)
                } else {
                    w / a
                }
            }
        }
    }
}

impl KernelSpec {
    fn with_form(form: KernelForm) -> Self {
        Self {
            form,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!(
                "constant kernel must be finite and >= 0, got {value}"
            )));
        }
        Ok(Self::with_form(KernelForm::Constant { value }))
    }

    /// Kernel `c²` of a map that is Lipschitz with constant `c`.
    pub fn lipschitz(c: f64) -> Result<Self> {
        Self::constant(c * c)
    }

    pub fn series_kb(coefficient: f64, decay: f64, exponent: f64) -> Result<Self> {
        check_series(coefficient, decay, exponent)?;
        Ok(Self::with_form(KernelForm::SeriesKb {
            coefficient,
            decay,
            exponent,
        }))
    }

    pub fn series_ka(coefficient: f64, decay: f64, exponent: f64) -> Result<Self> {
        check_series(coefficient, decay, exponent)?;
        Ok(Self::with_form(KernelForm::SeriesKa {
            coefficient,
            decay,
            exponent,
        }))
    }

    pub fn mode_list(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.len() != rates.len() {
            return Err(Error::Dimension {
                expected: weights.len(),
                got: rates.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || rates.iter().any(|r| !(*r >= 0.0 && r.is_finite()))
        {
            return Err(Error::Domain(
                "mode weights and rates must be finite and >= 0".into(),
            ));
        }
        Ok(Self::with_form(KernelForm::ModeList { weights, rates }))
    }

    /// `Σ_m weight·e^{−rate_factor·λ_m t}` over all Dirichlet modes of the rectangle.
    pub fn rectangle_modes(
        weight: f64,
        domain: RectDomain,
        alpha: f64,
        rate_factor: f64,
    ) -> Result<Self> {
        if !(weight >= 0.0 && alpha > 0.0 && rate_factor > 0.0) {
            return Err(Error::Domain(
                "rectangle kernel needs weight >= 0, alpha > 0, rate factor > 0".into(),
            ));
        }
        Ok(Self::with_form(KernelForm::RectangleModes {
            weight,
            domain,
            alpha,
            rate_factor,
        }))
    }

    pub fn with_truncation_tol(mut self, tol: f64) -> Self {
        self.truncation_tol = tol;
        self
    }

    /// `true` when the kernel vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Constant { value } => *value == 0.0,
            KernelForm::SeriesKb { coefficient, .. } | KernelForm::SeriesKa { coefficient, .. } => {
                *coefficient == 0.0
            }
            KernelForm::ModeList { weights, .. } => weights.iter().all(|w| *w == 0.0),
            KernelForm::RectangleModes { weight, .. } => *weight == 0.0,
        }
    }

    /// `K(t)`. Infinite series are summed until the integral tail bound falls
    /// below the truncation tolerance.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match &self.form {
            KernelForm::Constant { value } => {
                check_time(t)?;
                Ok(*value)
            }
            KernelForm::ModeList { weights, rates } => {
                check_time(t)?;
                Ok(finite_sum(weights, rates, Summand::Kernel(t)))
            }
            _ => {
                if !(t > 0.0) {
                    return Err(Error::Domain(format!(
                        "series kernels are only defined for t > 0, got {t}"
                    )));
                }
                if self.is_zero() {
                    return Ok(0.0);
                }
                self.sum_shells(Summand::Kernel(t))
            }
        }
    }

    /// `φ(t) = ∫₀ᵗ K(s) ds`, integrated termwise in closed form.
    pub fn phi(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match &self.form {
            KernelForm::Constant { value } => Ok(value * t),
            KernelForm::ModeList { weights, rates } => {
                Ok(finite_sum(weights, rates, Summand::Phi(t)))
            }
            _ => {
                self.check_time_integrable()?;
                if t == 0.0 || self.is_zero() {
                    return Ok(0.0);
                }
                self.sum_shells(Summand::Phi(t))
            }
        }
    }

    /// `lim_{t→∞} φ(t)`, possibly `+∞`.
    pub fn phi_infinity(&self) -> Result<f64> {
        match &self.form {
            KernelForm::Constant { value } => Ok(if *value > 0.0 { f64::INFINITY } else { 0.0 }),
            KernelForm::ModeList { weights, rates } => {
                Ok(finite_sum(weights, rates, Summand::PhiInfinity))
            }
            _ => {
                self.check_time_integrable()?;
                if self.is_zero() {
                    return Ok(0.0);
                }
                self.sum_shells(Summand::PhiInfinity)
            }
        }
    }

    /// Tests `∫₀¹ s^{−ε} K(s) ds < ∞` and evaluates it termwise when finite.
    ///
    /// Each term is `w r^{ε−1} γ(1−ε, r)`; the series converges exactly when
    /// the shell envelope satisfies `p(1−ε) > q + 1`.
    pub fn epsilon_integrability(&self, eps: f64) -> Result<EpsIntegrability> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
        let value = match &self.form {
            KernelForm::Constant { value } => value / (1.0 - eps),
            KernelForm::ModeList { weights, rates } => {
                finite_sum(weights, rates, Summand::EpsMoment(eps))
            }
            _ => {
                let env = self.envelope().expect("series kernels have an envelope");
                if env.p * (1.0 - eps) <= env.q + 1.0 {
                    return Ok(EpsIntegrability {
                        finite: false,
                        value: f64::INFINITY,
                    });
                }
                if self.is_zero() {
                    0.0
                } else {
                    self.sum_shells(Summand::EpsMoment(eps))?
                }
            }
        };
        Ok(EpsIntegrability {
            finite: value.is_finite(),
            value,
        })
    }

    fn envelope(&self) -> Option<Envelope> {
        match &self.form {
            KernelForm::SeriesKb {
                coefficient,
                decay,
                exponent,
            } => Some(Envelope {
                c: *coefficient,
                q: 0.0,
                p: *exponent,
                delta: *decay,
            }),
            KernelForm::SeriesKa {
                coefficient,
                decay,
                exponent,
            } => Some(Envelope {
                c: *coefficient,
                q: 1.0,
                p: *exponent,
                delta: *decay,
            }),
            KernelForm::RectangleModes {
                weight,
                domain,
                alpha,
                rate_factor,
            } => {
                let d = domain.dim() as f64;
                Some(Envelope {
                    c: weight * d,
                    q: d - 1.0,
                    p: 2.0 * alpha,
                    delta: rate_factor * (PI / domain.max_length()).powf(2.0 * alpha),
                })
            }
            _ => None,
        }
    }

    fn check_time_integrable(&self) -> Result<()> {
        if let Some(env) = self.envelope() {
            if env.p <= env.q + 1.0 && !self.is_zero() {
                return Err(Error::NonIntegrable(format!(
                    "time integral of the series diverges near zero \
                     (shell exponent p = {} must exceed q + 1 = {})",
                    env.p,
                    env.q + 1.0
                )));
            }
        }
        Ok(())
    }

    /// Visits every (weight, rate) pair of shell `k ≥ 1`.
    fn for_each_in_shell(&self, k: usize, mut visit: impl FnMut(f64, f64)) {
        let kf = k as f64;
        match &self.form {
            KernelForm::SeriesKb {
                coefficient,
                decay,
                exponent,
            } => visit(*coefficient, decay * kf.powf(*exponent)),
            KernelForm::SeriesKa {
                coefficient,
                decay,
                exponent,
            } => visit(coefficient * kf, decay * kf.powf(*exponent)),
            KernelForm::RectangleModes {
                weight,
                domain,
                alpha,
                rate_factor,
            } => {
                let scales: Vec<f64> = (0..domain.dim())
                    .map(|i| (PI / domain.length(i)).powi(2))
                    .collect();
                for_each_shell_index(domain.dim(), k, |m| {
                    let lap: f64 = m
                        .iter()
                        .zip(&scales)
                        .map(|(&mi, s)| s * (mi * mi) as f64)
                        .sum();
                    visit(*weight, rate_factor * lap.powf(*alpha));
                });
            }
            _ => unreachable!("finite kernels are not summed by shells"),
        }
    }

    fn tail_bound(&self, env: &Envelope, summand: Summand, m: usize) -> f64 {
        let mf = m as f64;
        match summand {
            Summand::Kernel(t) => {
                let a = env.delta * t;
                // x^q e^{−a x^p} decreases once x ≥ (q / (a p))^{1/p}.
                let monotone_from = if env.q > 0.0 {
                    (env.q / (a * env.p)).powf(1.0 / env.p)
                } else {
                    0.0
                };
                if mf < monotone_from {
                    f64::INFINITY
                } else {
                    power_exp_tail(env.c, env.q, env.p, a, mf)
                }
            }
            Summand::Phi(_) | Summand::PhiInfinity => {
                power_tail(env.c / env.delta, env.p - env.q, mf)
            }
            Summand::EpsMoment(eps) => {
                let a = 1.0 - eps;
                power_tail(env.c * gamma(a) * env.delta.powf(-a), env.p * a - env.q, mf)
            }
        }
    }

    /// One-index series (and one-dimensional rectangles) have shell weight
    /// exactly `c k^q` and rate exactly `δ k^p`.
    fn envelope_is_exact(&self) -> bool {
        match &self.form {
            KernelForm::SeriesKb { .. } | KernelForm::SeriesKa { .. } => true,
            KernelForm::RectangleModes { domain, .. } => domain.dim() == 1,
            _ => false,
        }
    }

    /// Exact tail `Σ_{k>m}` once every remaining term has reached its power-law
    /// regime: `w/r` for `φ`, `w Γ(1−ε) r^{ε−1}` for the ε-moment.
    fn asymptotic_tail(&self, env: &Envelope, summand: Summand, m: usize) -> Option<f64> {
        let r_next = env.delta * ((m + 1) as f64).powf(env.p);
        let (scale, beta) = match summand {
            Summand::Kernel(_) => return None,
            Summand::Phi(t) if r_next * t < ASYMPTOTIC_RATE => return None,
            Summand::Phi(_) | Summand::PhiInfinity => (1.0, 1.0),
            Summand::EpsMoment(_) if r_next < ASYMPTOTIC_RATE => return None,
            Summand::EpsMoment(eps) => (gamma(1.0 - eps), 1.0 - eps),
        };
        Some(
            scale
                * env.c
                * env.delta.powf(-beta)
                * hurwitz_zeta(env.p * beta - env.q, (m + 1) as f64),
        )
    }

    fn sum_shells(&self, summand: Summand) -> Result<f64> {
        let env = self.envelope().expect("series kernels have an envelope");
        let exact = self.envelope_is_exact();
        let mut total = 0.0;
        for k in 1..=MAX_SHELLS {
            self.for_each_in_shell(k, |w, r| total += summand.term(w, r));
            if exact {
                if let Some(tail) = self.asymptotic_tail(&env, summand, k) {
                    return Ok(total + tail);
                }
            }
            if self.tail_bound(&env, summand, k) < self.truncation_tol {
                return Ok(total);
            }
        }
        Err(Error::Numerical(format!(
            "kernel series did not reach tolerance {} within {MAX_SHELLS} shells",
            self.truncation_tol
        )))
    }
}

fn check_series(coefficient: f64, decay: f64, exponent: f64) -> Result<()> {
    if !(coefficient >= 0.0 && decay > 0.0 && exponent > 0.0) {
        return Err(Error::Domain(format!(
            "series kernel needs C >= 0, δ > 0, p > 0 (got {coefficient}, {decay}, {exponent})"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

fn finite_sum(weights: &[f64], rates: &[f64], summand: Summand) -> f64 {
    weights
        .iter()
        .zip(rates)
        .map(|(&w, &r)| summand.term(w, r))
        .sum()
}

/// Enumerates multi-indices in `[1, k]^d` whose largest entry equals `k`.
fn for_each_shell_index(d: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut m = vec![1usize; d];
    // Split by the first axis that attains k: earlier axes < k, later axes <= k.
    for first in 0..d {
        let upper: Vec<usize> = (0..d)
            .map(|i| match i.cmp(&first) {
                std::cmp::Ordering::Less => k - 1,
                std::cmp::Ordering::Equal => k,
                std::cmp::Ordering::Greater => k,
            })
            .collect();
        if upper.contains(&0) {
            continue;
        }
        for (i, v) in m.iter_mut().enumerate() {
            *v = if i == first { k } else { 1 };
        }
        loop {
            visit(&m);
            // Odometer over every axis except `first`.
            let mut axis = 0;
            loop {
                if axis == d {
                    break;
                }
                if axis != first && m[axis] < upper[axis] {
                    m[axis] += 1;
                    break;
                }
                if axis != first {
                    m[axis] = 1;
                }
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
    }
}

/// The critical time `t₀ = sup{t > 0 : φ_b(t) + φ_σ(t) ≤ 1/6}`; `Infinite`
/// carries the limit convention `t₀(6^{t/t₀} − 1) = t₀(1 − 6^{−t/t₀}) = t ln 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalTime {
    Finite(f64),
    Infinite,
}

impl CriticalTime {
    pub fn is_infinite(&self) -> bool {
        matches!(self, CriticalTime::Infinite)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            CriticalTime::Finite(t0) => *t0,
            CriticalTime::Infinite => f64::INFINITY,
        }
    }

    /// `t / t₀`, zero when `t₀ = ∞`.
    pub fn ratio(&self, t: f64) -> f64 {
        match self {
            CriticalTime::Finite(t0) => t / t0,
            CriticalTime::Infinite => 0.0,
        }
    }

    /// `t₀ (6^{t/t₀} − 1)`.
    pub fn growth_scale(&self, t: f64) -> f64 {
        let ln6 = 6f64.ln();
        match self {
            CriticalTime::Finite(t0) => t0 * (t / t0 * ln6).exp_m1(),
            CriticalTime::Infinite => t * ln6,
        }
    }

    /// `t₀ (1 − 6^{−t/t₀})`.
    pub fn decay_scale(&self, t: f64) -> f64 {
        let ln6 = 6f64.ln();
        match self {
            CriticalTime::Finite(t0) => -t0 * (-t / t0 * ln6).exp_m1(),
            CriticalTime::Infinite => t * ln6,
        }
    }
}

impl fmt::Display for CriticalTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalTime::Finite(t0) => write!(f, "{t0}"),
            CriticalTime::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for CriticalTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CriticalTime::Finite(t0) => s.serialize_f64(*t0),
            CriticalTime::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Result of the `t₀` search.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalTimeSearch {
    pub t0: CriticalTime,
    /// Set when `t₀ = ∞` was inferred from the search horizon rather than from
    /// the closed-form limit of `φ_b + φ_σ`.
    pub note: Option<String>,
}

/// Solves for `t₀` by bisection on the non-decreasing map `φ_b + φ_σ`.
pub fn compute_t0(kb: &KernelSpec, ksigma: &KernelSpec) -> Result<CriticalTimeSearch> {
    let total = |t: f64| -> Result<f64> { Ok(kb.phi(t)? + ksigma.phi(t)?) };
    let limit = kb.phi_infinity()? + ksigma.phi_infinity()?;
    if limit <= CRITICAL_LEVEL {
        return Ok(CriticalTimeSearch {
            t0: CriticalTime::Infinite,
            note: None,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while total(hi)? <= CRITICAL_LEVEL {
        lo = hi;
        hi *= 2.0;
        if hi > T0_HORIZON {
            return Ok(CriticalTimeSearch {
                t0: CriticalTime::Infinite,
                note: Some(format!(
                    "phi_b + phi_sigma stays below 1/6 up to t = {T0_HORIZON:e}; \
                     t0 = inf inferred from the search horizon"
                )),
            });
        }
    }
    while hi - lo > T0_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid)? <= CRITICAL_LEVEL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalTimeSearch {
        t0: CriticalTime::Finite(0.5 * (lo + hi)),
        note: None,
    })
}

/// Gradient-bound constant `6^{1 + t/t₀}`.
pub fn gradient_constant(t: f64, t0: CriticalTime) -> f64 {
    6f64.powf(1.0 + t0.ratio(t))
}

/// Bound `6^{(t + t₀)/t₀}` on `E|∇_v X_t|² / |v|²`; numerically the gradient
/// constant.
pub fn flow_bound_constant(t: f64, t0: CriticalTime) -> f64 {
    gradient_constant(t, t0)
}

/// Log-Harnack constant `3 ln 6 / (λ(σ) t₀ (1 − 6^{−t/t₀}))`.
pub fn logharnack_constant(t: f64, t0: CriticalTime, lambda_sigma: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "log-Harnack constant needs t > 0, got {t}"
        )));
    }
    if !(lambda_sigma > 0.0) {
        return Err(Error::Assumption {
            assumption: "A2",
            detail: format!("lower ellipticity bound must be positive, got {lambda_sigma}"),
        });
    }
    Ok(3.0 * 6f64.ln() / (lambda_sigma * t0.decay_scale(t)))
}

/// Poincaré constant `12 λ̄(σ) t₀ (6^{t/t₀} − 1) / ln 6`.
pub fn poincare_constant(t: f64, t0: CriticalTime, lambda_bar: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "Poincaré constant needs t >= 0, got {t}"
        )));
    }
    Ok(12.0 * lambda_bar * t0.growth_scale(t) / 6f64.ln())
}

/// Log-Harnack constant rebuilt from the gradient profile `Φ(s) = 6^{1+s/t₀}`
/// as `1 / (2 λ(σ) ∫₀ᵗ Φ(s)^{−1} ds)`, with the integral done by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackFromProfile {
    pub constant: f64,
    pub integral: f64,
}

pub fn logharnack_constant_from_phi(
    t0: CriticalTime,
    t: f64,
    lambda_sigma: f64,
) -> Result<HarnackFromProfile> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "log-Harnack constant needs t > 0, got {t}"
        )));
    }
    if !(lambda_sigma > 0.0) {
        return Err(Error::Assumption {
            assumption: "A2",
            detail: format!("lower ellipticity bound must be positive, got {lambda_sigma}"),
        });
    }
    let integral = inverse_profile_integral(t0, t)?;
    Ok(HarnackFromProfile {
        constant: 1.0 / (2.0 * lambda_sigma * integral),
        integral,
    })
}

fn inverse_profile_integral(t0: CriticalTime, s: f64) -> Result<f64> {
    let inv = |u: f64| 1.0 / gradient_constant(u, t0);
    // Integrand is bounded by 1/6, so this is a relative target of ~1e-14.
    adaptive_simpson(inv, 0.0, s, 1e-15 * s, 50)
}

/// The interpolation schedule `h_s = ∫₀ˢ Φ⁻¹ / ∫₀ᵗ Φ⁻¹` that attains the
/// log-Harnack constant.
pub fn optimal_schedule(t0: CriticalTime, t: f64, s: f64) -> Result<f64> {
    if !(t > 0.0 && (0.0..=t).contains(&s)) {
        return Err(Error::Domain(format!(
            "schedule needs 0 <= s <= t, t > 0; got s={s}, t={t}"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(inverse_profile_integral(t0, s)? / inverse_profile_integral(t0, t)?)
}

/// Kernels, ellipticity bounds and critical time of one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityProfile {
    pub kb: KernelSpec,
    pub ksigma: KernelSpec,
    pub lambda_sigma: f64,
    pub lambda_bar_sigma: Option<f64>,
    pub t0: CriticalTime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0_note: Option<String>,
}

impl RegularityProfile {
    pub fn new(
        kb: KernelSpec,
        ksigma: KernelSpec,
        lambda_sigma: f64,
        lambda_bar_sigma: Option<f64>,
    ) -> Result<Self> {
        if !(lambda_sigma >= 0.0) {
            return Err(Error::Domain(format!(
                "lambda(sigma) must be >= 0, got {lambda_sigma}"
            )));
        }
        if let Some(bar) = lambda_bar_sigma {
            if bar < lambda_sigma {
                return Err(Error::Domain(format!(
                    "upper bound {bar} lies below lower bound {lambda_sigma}"
                )));
            }
        }
        let search = compute_t0(&kb, &ksigma)?;
        Ok(Self {
            kb,
            ksigma,
            lambda_sigma,
            lambda_bar_sigma,
            t0: search.t0,
            t0_note: search.note,
        })
    }

    pub fn phi_total(&self, t: f64) -> Result<f64> {
        Ok(self.kb.phi(t)? + self.ksigma.phi(t)?)
    }

    pub fn gradient_constant(&self, t: f64) -> f64 {
        gradient_constant(t, self.t0)
    }

    pub fn logharnack_constant(&self, t: f64) -> Result<f64> {
        logharnack_constant(t, self.t0, self.lambda_sigma)
    }

    /// The variance-gradient bound shares the log-Harnack constant.
    pub fn variance_gradient_constant(&self, t: f64) -> Result<f64> {
        self.logharnack_constant(t)
    }

    pub fn poincare_constant(&self, t: f64) -> Result<f64> {
        let bar = self.lambda_bar_sigma.ok_or_else(|| {
            Error::Missing("upper ellipticity bound lambda_bar(sigma) (sup_sq)".into())
        })?;
        poincare_constant(t, self.t0, bar)
    }
}
