//! Stochastic reaction–diffusion on a rectangle:
//! `du = (−(−Δ)^α u + ψ(u)) dt + φ(u) dW`, with pointwise ψ and φ, realised as
//! a pseudo-spectral Galerkin system together with its exact regularity data.

use std::f64::consts::{FRAC_PI_2, PI};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{second_moment_table, MomentTable};
use crate::regularity::{KernelSpec, RegularityProfile};
use crate::simulator::{Coefficients, Simulator};
use crate::spectral::{EigenSpectrum, GalerkinState, RectDomain};

/// Closed-form scalar nonlinearities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScalarForm {
    /// `s ↦ a s + b`.
    Affine { a: f64, b: f64 },
    /// `s ↦ c0 + amp sin(freq s)`.
    SinPerturbed { c0: f64, amp: f64, freq: f64 },
    /// `s ↦ a arctan(s)`.
    AtanScaled { a: f64 },
    /// Piecewise-linear interpolation through `(s, g)` knots, flat outside.
    Table { points: Vec<(f64, f64)> },
}

impl ScalarForm {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarForm::Affine { a, b } => a * s + b,
            ScalarForm::SinPerturbed { c0, amp, freq } => c0 + amp * (freq * s).sin(),
            ScalarForm::AtanScaled { a } => a * s.atan(),
            ScalarForm::Table { points } => table_eval(points, s),
        }
    }

    pub fn derivative(&self, s: f64) -> Option<f64> {
        match self {
            ScalarForm::Affine { a, .. } => Some(*a),
            ScalarForm::SinPerturbed { amp, freq, .. } => Some(amp * freq * (freq * s).cos()),
            ScalarForm::AtanScaled { a } => Some(a / (1.0 + s * s)),
            ScalarForm::Table { .. } => None,
        }
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(self, ScalarForm::Table { .. })
    }

    /// Sharp Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ScalarForm::Affine { a, .. } => a.abs(),
            ScalarForm::SinPerturbed { amp, freq, .. } => (amp * freq).abs(),
            ScalarForm::AtanScaled { a } => a.abs(),
            ScalarForm::Table { points } => points
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Closure of the range, as `(lo, hi)`; infinite ends for unbounded maps.
    fn range(&self) -> (f64, f64) {
        match self {
            ScalarForm::Affine { a, b } => {
                if *a == 0.0 {
                    (*b, *b)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            ScalarForm::SinPerturbed { c0, amp, freq } => {
                let r = if *freq == 0.0 { 0.0 } else { amp.abs() };
                (c0 - r, c0 + r)
            }
            ScalarForm::AtanScaled { a } => (-a.abs() * FRAC_PI_2, a.abs() * FRAC_PI_2),
            ScalarForm::Table { points } => points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, g)| {
                    (lo.min(g), hi.max(g))
                }),
        }
    }

    /// `inf_s g(s)²`.
    pub fn inf_sq(&self) -> f64 {
        let (lo, hi) = self.range();
        if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs()).powi(2)
        }
    }

    /// `sup_s g(s)²`, `None` when unbounded.
    pub fn sup_sq(&self) -> Option<f64> {
        let (lo, hi) = self.range();
        let m = lo.abs().max(hi.abs());
        m.is_finite().then_some(m * m)
    }

    /// `lim_{|s|→∞} g(s)² / s²`.
    fn quadratic_growth(&self) -> f64 {
        match self {
            ScalarForm::Affine { a, .. } => a * a,
            _ => 0.0,
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, ScalarForm::Affine { a, b } if *a == 0.0 && *b == 0.0)
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            ScalarForm::Affine { a, b } if *a == 0.0 => Some(*b),
            ScalarForm::SinPerturbed { c0, amp, freq } if *amp == 0.0 || *freq == 0.0 => Some(*c0),
            ScalarForm::AtanScaled { a } if *a == 0.0 => Some(0.0),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let ScalarForm::Table { points } = self {
            if points.len() < 2 {
                return Err(Error::Config("table needs at least two knots".into()));
            }
            if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::Config(
                    "table knots must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= s);
    let (s0, g0) = points[i - 1];
    let (s1, g1) = points[i];
    g0 + (g1 - g0) * (s - s0) / (s1 - s0)
}

/// A scalar nonlinearity with its declared Lipschitz constant and bounds on
/// its square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarFunctionSpec {
    #[serde(flatten)]
    pub form: ScalarForm,
    pub lipschitz_c: f64,
    pub inf_sq: f64,
    pub sup_sq: Option<f64>,
}

/// File representation: the form plus optional overrides of the derived bounds.
#[derive(Debug, Clone, Deserialize)]
pub struct ScalarFunctionFile {
    #[serde(flatten)]
    pub form: ScalarForm,
    pub lipschitz_c: Option<f64>,
    pub inf_sq: Option<f64>,
    pub sup_sq: Option<f64>,
}

impl ScalarFunctionSpec {
    /// Bounds derived from the closed form.
    pub fn new(form: ScalarForm) -> Result<Self> {
        form.validate()?;
        Ok(Self {
            lipschitz_c: form.lipschitz(),
            inf_sq: form.inf_sq(),
            sup_sq: form.sup_sq(),
            form,
        })
    }

    pub fn from_file(f: ScalarFunctionFile) -> Result<Self> {
        let mut spec = Self::new(f.form)?;
        if let Some(c) = f.lipschitz_c {
            spec.lipschitz_c = c;
        }
        if let Some(v) = f.inf_sq {
            spec.inf_sq = v;
        }
        if f.sup_sq.is_some() {
            spec.sup_sq = f.sup_sq;
        }
        Ok(spec)
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self::new(ScalarForm::Affine { a, b }).expect("affine forms are valid")
    }

    pub fn sin_perturbed(c0: f64, amp: f64, freq: f64) -> Self {
        Self::new(ScalarForm::SinPerturbed { c0, amp, freq }).expect("valid form")
    }

    pub fn atan_scaled(a: f64) -> Self {
        Self::new(ScalarForm::AtanScaled { a }).expect("valid form")
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.form.eval(s)
    }

    pub fn derivative(&self, s: f64) -> Option<f64> {
        self.form.derivative(s)
    }

    /// Spot-checks the declared constants: the Lipschitz bound on 10⁴ random
    /// pairs and the bounds on `g²` over a dense grid.
    pub fn audit(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut uniform = |lo: f64, hi: f64| {
            lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..10_000 {
            let (r, s) = (uniform(-50.0, 50.0), uniform(-50.0, 50.0));
            let slack = 1e-12 * (1.0 + self.eval(r).abs() + self.eval(s).abs());
            if (self.eval(r) - self.eval(s)).abs() > self.lipschitz_c * (r - s).abs() + slack {
                return Err(Error::Assumption {
                    assumption: "LIP",
                    detail: format!(
                        "declared Lipschitz constant {} violated at ({r}, {s})",
                        self.lipschitz_c
                    ),
                });
            }
        }
        for i in 0..=20_000 {
            let s = -100.0 + 0.01 * i as f64;
            let g2 = self.eval(s).powi(2);
            let slack = 1e-12 * (1.0 + g2);
            if g2 < self.inf_sq - slack || self.sup_sq.is_some_and(|sup| g2 > sup + slack) {
                return Err(Error::Assumption {
                    assumption: "bounds",
                    detail: format!("declared bounds on g^2 violated at s = {s} (g^2 = {g2})"),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of the growth check `φ(s)² + ψ(s)² ≤ ε₀ s² + C₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub holds: bool,
    pub eps0: f64,
    pub c0: f64,
    /// `lim φ²/s² + ψ²/s²` as `|s| → ∞`.
    pub asymptotic_slope: f64,
    /// First grid point that violates the bound, if any.
    pub violated_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactionDiffusionModel {
    pub domain: RectDomain,
    pub alpha: f64,
    pub psi: ScalarFunctionSpec,
    pub phi: ScalarFunctionSpec,
    pub n: usize,
    /// Quadrature points per dimension; defaults to twice the largest mode
    /// index along each axis.
    pub quad_points: Option<usize>,
}

impl ReactionDiffusionModel {
    pub fn new(
        domain: RectDomain,
        alpha: f64,
        psi: ScalarFunctionSpec,
        phi: ScalarFunctionSpec,
        n: usize,
        quad_points: Option<usize>,
    ) -> Result<Self> {
        let d = domain.dim() as f64;
        if !(alpha > d / 2.0) {
            return Err(Error::Assumption {
                assumption: "A3",
                detail: format!(
                    "the rectangle noise kernel is integrable only for alpha > d/2 = {}, got {alpha}",
                    d / 2.0
                ),
            });
        }
        if n == 0 {
            return Err(Error::Config("need at least one Galerkin mode".into()));
        }
        let model = Self {
            domain,
            alpha,
            psi,
            phi,
            n,
            quad_points,
        };
        if let Some(q) = quad_points {
            let need = model.min_quad_points()?;
            if q < need {
                return Err(Error::Config(format!(
                    "quad_points = {q} is below the dealiasing minimum {need} (2 × largest mode index)"
                )));
            }
        }
        Ok(model)
    }

    /// Unit interval, `α = 2`, `φ = 1 + 0.1 sin`, `ψ = 0.5 arctan`, 16 modes.
    pub fn reference() -> Self {
        Self::new(
            RectDomain::unit_interval(),
            2.0,
            ScalarFunctionSpec::atan_scaled(0.5),
            ScalarFunctionSpec::sin_perturbed(1.0, 0.1, 1.0),
            16,
            None,
        )
        .expect("reference model is valid")
    }

    /// Unit interval, `α = 1`, `ψ = 0`, `φ ≡ φ₀`: independent OU modes.
    pub fn ornstein_uhlenbeck(phi0: f64, n: usize) -> Self {
        Self::new(
            RectDomain::unit_interval(),
            1.0,
            ScalarFunctionSpec::affine(0.0, 0.0),
            ScalarFunctionSpec::affine(0.0, phi0),
            n,
            None,
        )
        .expect("OU model is valid")
    }

    /// Same model truncated at `n` modes (quadrature rescaled accordingly).
    pub fn with_modes(&self, n: usize) -> Result<Self> {
        Self::new(
            self.domain.clone(),
            self.alpha,
            self.psi.clone(),
            self.phi.clone(),
            n,
            None,
        )
    }

    /// Constant noise intensity, when `φ` is constant.
    pub fn constant_noise(&self) -> Option<f64> {
        self.phi.form.constant_value()
    }

    pub fn spectrum(&self) -> Result<EigenSpectrum> {
        EigenSpectrum::rectangle(self.domain.clone(), self.alpha, self.n)
    }

    fn min_quad_points(&self) -> Result<usize> {
        let s = self.spectrum()?;
        let max_index = s.modes().iter().flatten().copied().max().unwrap_or(1);
        Ok(2 * max_index)
    }

    pub fn effective_quad_points(&self) -> Result<usize> {
        match self.quad_points {
            Some(q) => Ok(q),
            None => self.min_quad_points(),
        }
    }

    /// Spectrum plus pseudo-spectral coefficients.
    pub fn system(&self) -> Result<GalerkinSystem> {
        let spectrum = self.spectrum()?;
        let coeffs = self.callbacks(&spectrum)?;
        Ok(GalerkinSystem { spectrum, coeffs })
    }

    pub fn callbacks(&self, spectrum: &EigenSpectrum) -> Result<PseudoSpectral> {
        PseudoSpectral::new(self, spectrum)
    }

    /// `K_σ(t) = c² Σ_m ‖e_m‖²_∞ e^{−2λ_m t}` with `c` the Lipschitz constant
    /// of φ and `‖e_m‖²_∞ = ∏ 2/(b_i − a_i)`.
    pub fn exact_ksigma(&self) -> Result<KernelSpec> {
        let c = self.phi.lipschitz_c;
        KernelSpec::rectangle_modes(
            c * c * self.domain.eigenfunction_sup_sq(),
            self.domain.clone(),
            self.alpha,
            2.0,
        )
    }

    pub fn kb(&self) -> Result<KernelSpec> {
        KernelSpec::lipschitz(self.psi.lipschitz_c)
    }

    /// `K_b = c_ψ²`, exact `K_σ`, `λ(σ) = inf φ²`, `λ̄(σ) = sup φ²`, and `t₀`.
    pub fn profile(&self) -> Result<RegularityProfile> {
        RegularityProfile::new(
            self.kb()?,
            self.exact_ksigma()?,
            self.phi.inf_sq,
            self.phi.sup_sq,
        )
    }

    /// Checks `φ(s)² + ψ(s)² ≤ ε₀ s² + C₀` on `s = 0` and a log-spaced grid of
    /// `±[10⁻³, 10³]`, plus the asymptotic quadratic growth of both maps.
    pub fn check_growth_condition(&self, eps0: f64, c0: f64) -> Result<GrowthCheck> {
        if !(eps0 > 0.0 && c0 > 0.0) {
            return Err(Error::Config(format!(
                "growth condition needs eps0 > 0 and C0 > 0, got {eps0}, {c0}"
            )));
        }
        let lhs = |s: f64| self.phi.eval(s).powi(2) + self.psi.eval(s).powi(2);
        let mut violated_at = None;
        let mut grid = vec![0.0];
        for i in 0..=600 {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / 600.0);
            grid.push(s);
            grid.push(-s);
        }
        for s in grid {
            let rhs = eps0 * s * s + c0;
            if lhs(s) > rhs * (1.0 + 1e-12) {
                violated_at = Some(s);
                break;
            }
        }
        let slope = self.phi.form.quadratic_growth() + self.psi.form.quadratic_growth();
        // On the boundary slope = ε₀ a linear cross term still eventually wins.
        let cross_term =
            |f: &ScalarForm| matches!(f, ScalarForm::Affine { a, b } if *a != 0.0 && *b != 0.0);
        let asymptotic_ok = slope < eps0
            || (slope == eps0 && !cross_term(&self.phi.form) && !cross_term(&self.psi.form));
        Ok(GrowthCheck {
            holds: violated_at.is_none() && asymptotic_ok,
            eps0,
            c0,
            asymptotic_slope: slope,
            violated_at,
        })
    }

    /// Evaluates the field of `state` on `points` equispaced nodes per
    /// dimension including the boundary.
    pub fn field_on_grid(
        &self,
        spectrum: &EigenSpectrum,
        state: &GalerkinState,
        points: usize,
    ) -> Result<Vec<(Vec<f64>, f64)>> {
        let points = points.max(2);
        let d = self.domain.dim();
        let mut idx = vec![0usize; d];
        let mut out = Vec::with_capacity(points.pow(d as u32));
        loop {
            let xi: Vec<f64> = idx
                .iter()
                .zip(self.domain.sides())
                .map(|(&j, &(a, b))| a + (b - a) * j as f64 / (points - 1) as f64)
                .collect();
            let u = spectrum.synthesize_at(state, &xi)?;
            out.push((xi, u));
            let mut axis = d;
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < points {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
}

/// Owned spectrum and coefficients of one Galerkin truncation.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub spectrum: EigenSpectrum,
    pub coeffs: PseudoSpectral,
}

/// Pseudo-spectral evaluation of `P_n ψ(u)` and `P_n(φ(u) w)`: synthesise the
/// fields on a tensor sine-quadrature grid, apply the nonlinearity pointwise,
/// project back by the discrete sine transform.
#[derive(Debug, Clone)]
pub struct PseudoSpectral {
    n: usize,
    grid_len: usize,
    /// `basis[k * grid_len + g] = e_k(ξ_g)`.
    basis: Vec<f64>,
    /// Quadrature weight, identical at every node.
    weight: f64,
    psi: ScalarForm,
    phi: ScalarForm,
    psi_zero: bool,
    phi_constant: Option<f64>,
}

/// Per-worker grid buffers.
#[derive(Debug, Clone)]
pub struct GridWorkspace {
    u: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PseudoSpectral {
    pub fn new(model: &ReactionDiffusionModel, spectrum: &EigenSpectrum) -> Result<Self> {
        let domain = &model.domain;
        let q = model.effective_quad_points()?;
        let d = domain.dim();
        let grid_len = q.pow(d as u32);
        let n = spectrum.len();
        let mut basis = vec![0.0; n * grid_len];
        for (k, m) in spectrum.modes().iter().enumerate() {
            // Per-axis sine tables at nodes j = 1..q of the DST-I grid.
            let tables: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let norm = (2.0 / domain.length(i)).sqrt();
                    (1..=q)
                        .map(|j| norm * (m[i] as f64 * PI * j as f64 / (q + 1) as f64).sin())
                        .collect()
                })
                .collect();
            let row = &mut basis[k * grid_len..(k + 1) * grid_len];
            for (g, value) in row.iter_mut().enumerate() {
                let mut rem = g;
                let mut v = 1.0;
                for i in (0..d).rev() {
                    v *= tables[i][rem % q];
                    rem /= q;
                }
                *value = v;
            }
        }
        let weight = (0..d).map(|i| domain.length(i) / (q + 1) as f64).product();
        Ok(Self {
            n,
            grid_len,
            basis,
            weight,
            psi_zero: model.psi.form.is_zero(),
            phi_constant: model.phi.form.constant_value(),
            psi: model.psi.form.clone(),
            phi: model.phi.form.clone(),
        })
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Field values on the quadrature grid.
    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.basis[k * self.grid_len..(k + 1) * self.grid_len];
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
    }

    /// Coefficients `⟨v, e_k⟩` of grid values by quadrature.
    pub fn project(&self, values: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.basis[k * self.grid_len..(k + 1) * self.grid_len];
            let s: f64 = row.iter().zip(values).map(|(b, v)| b * v).sum();
            *o = self.weight * s;
        }
    }

    /// Quadrature inner product of two grid fields.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weight * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Basis row `e_k` on the grid.
    pub fn basis_row(&self, k: usize) -> &[f64] {
        &self.basis[k * self.grid_len..(k + 1) * self.grid_len]
    }
}

impl Coefficients for PseudoSpectral {
    type Workspace = GridWorkspace;

    fn dim(&self) -> usize {
        self.n
    }

    fn workspace(&self) -> GridWorkspace {
        GridWorkspace {
            u: vec![0.0; self.grid_len],
            a: vec![0.0; self.grid_len],
            b: vec![0.0; self.grid_len],
        }
    }

    fn drift(&self, x: &[f64], out: &mut [f64], ws: &mut GridWorkspace) {
        if self.psi_zero {
            out.fill(0.0);
            return;
        }
        self.synthesize(x, &mut ws.u);
        for (a, &u) in ws.a.iter_mut().zip(&ws.u) {
            *a = self.psi.eval(u);
        }
        self.project(&ws.a, out);
    }

    fn diffusion(&self, x: &[f64], dw: &[f64], out: &mut [f64], ws: &mut GridWorkspace) {
        if let Some(c) = self.phi_constant {
            for (o, w) in out.iter_mut().zip(dw) {
                *o = c * w;
            }
            return;
        }
        self.synthesize(x, &mut ws.u);
        self.synthesize(dw, &mut ws.b);
        for ((a, &u), &w) in ws.a.iter_mut().zip(&ws.u).zip(&ws.b) {
            *a = self.phi.eval(u) * w;
        }
        self.project(&ws.a, out);
    }

    fn has_jacobians(&self) -> bool {
        self.psi.has_derivative() && self.phi.has_derivative()
    }

    fn drift_jacobian(
        &self,
        x: &[f64],
        h: &[f64],
        out: &mut [f64],
        ws: &mut GridWorkspace,
    ) -> Result<()> {
        if !self.psi.has_derivative() {
            return Err(Error::Missing(
                "derivative of psi; use finite differences".into(),
            ));
        }
        if self.psi_zero {
            out.fill(0.0);
            return Ok(());
        }
        self.synthesize(x, &mut ws.u);
        self.synthesize(h, &mut ws.b);
        for ((a, &u), &hv) in ws.a.iter_mut().zip(&ws.u).zip(&ws.b) {
            *a = self.psi.derivative(u).unwrap_or(0.0) * hv;
        }
        self.project(&ws.a, out);
        Ok(())
    }

    fn diffusion_jacobian(
        &self,
        x: &[f64],
        h: &[f64],
        dw: &[f64],
        out: &mut [f64],
        ws: &mut GridWorkspace,
    ) -> Result<()> {
        if !self.phi.has_derivative() {
            return Err(Error::Missing(
                "derivative of phi; use finite differences".into(),
            ));
        }
        if self.phi_constant.is_some() {
            out.fill(0.0);
            return Ok(());
        }
        self.synthesize(x, &mut ws.u);
        self.synthesize(h, &mut ws.b);
        for ((a, &u), &hv) in ws.a.iter_mut().zip(&ws.u).zip(&ws.b) {
            *a = self.phi.derivative(u).unwrap_or(0.0) * hv;
        }
        self.synthesize(dw, &mut ws.b);
        for (a, &w) in ws.a.iter_mut().zip(&ws.b) {
            *a *= w;
        }
        self.project(&ws.a, out);
        Ok(())
    }
}

/// Verdict of the plateau heuristic for `sup_t E|u_t|² < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauVerdict {
    Bounded,
    NotBounded,
    /// Fewer than three checkpoints.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub growth: GrowthCheck,
    pub table: MomentTable,
    pub verdict: PlateauVerdict,
    /// The verdict is a finite-horizon heuristic, not a proof of boundedness.
    pub heuristic: &'static str,
}

/// Second moments `E|u_t|²` at the checkpoints (with standard errors) and the
/// plateau verdict: "bounded" when the last three estimates agree pairwise
/// within 2 combined standard errors. Requires the growth condition for
/// `(eps0, c0)`.
#[allow(clippy::too_many_arguments)]
pub fn moment_harness<C: Coefficients>(
    model: &ReactionDiffusionModel,
    sim: &Simulator<'_, C>,
    x0: &GalerkinState,
    checkpoints: &[f64],
    paths: usize,
    threads: Option<usize>,
    eps0: f64,
    c0: f64,
) -> Result<MomentReport> {
    let growth = model.check_growth_condition(eps0, c0)?;
    if !growth.holds {
        return Err(Error::Assumption {
            assumption: "DW",
            detail: format!(
                "phi^2 + psi^2 <= {eps0} s^2 + {c0} fails (asymptotic slope {}, first violation at {:?})",
                growth.asymptotic_slope, growth.violated_at
            ),
        });
    }
    let table = second_moment_table(sim, x0, checkpoints, paths, threads)?;
    let verdict = plateau_verdict(&table);
    Ok(MomentReport {
        growth,
        table,
        verdict,
        heuristic: "last three checkpoints agree within 2 combined standard errors",
    })
}

pub fn plateau_verdict(table: &MomentTable) -> PlateauVerdict {
    let rows = &table.rows;
    if rows.len() < 3 {
        return PlateauVerdict::Insufficient;
    }
    let last = &rows[rows.len() - 3..];
    for i in 0..3 {
        for j in i + 1..3 {
            let diff = (last[i].second_moment - last[j].second_moment).abs();
            if diff > 2.0 * last[i].stderr.hypot(last[j].stderr) {
                return PlateauVerdict::NotBounded;
            }
        }
    }
    PlateauVerdict::Bounded
}
