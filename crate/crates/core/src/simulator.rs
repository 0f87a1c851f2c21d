//! Time stepping of the n-mode Galerkin system in mild form, its derivative
//! flow, coupled pairs under common noise, and the exact Ornstein–Uhlenbeck
//! reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseStream;
use crate::spectral::{EigenSpectrum, GalerkinState};

/// Default step used by the exponential integrator.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential integrator: the linear part and the Itô isometry of the
    /// stochastic convolution are integrated exactly per mode, nonlinear
    /// coefficients are frozen over the step.
    #[default]
    ExponentialEuler,
    /// Plain Euler–Maruyama, kept for cross-validation.
    EulerMaruyama,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential_euler" => Ok(Scheme::ExponentialEuler),
            "euler_maruyama" => Ok(Scheme::EulerMaruyama),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Requested discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
}

/// Realised discretisation: `steps · dt = t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub steps: usize,
    pub dt: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::Domain(format!(
                "t_end must be finite and >= 0, got {t_end}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { scheme, dt, t_end })
    }

    /// Uses [`default_dt`] for the step size.
    pub fn with_default_dt(scheme: Scheme, t_end: f64, spectrum: &EigenSpectrum) -> Result<Self> {
        Self::new(scheme, t_end, default_dt(scheme, spectrum))
    }

    /// `t_end / dt` rounded to the nearest integer (at least one step when
    /// `t_end > 0`).
    pub fn grid(&self) -> TimeGrid {
        if self.t_end == 0.0 {
            return TimeGrid {
                steps: 0,
                dt: self.dt,
            };
        }
        let steps = ((self.t_end / self.dt).round() as usize).max(1);
        TimeGrid {
            steps,
            dt: self.t_end / steps as f64,
        }
    }
}

/// `1e-3` for the exponential integrator, which is stable for every mode;
/// Euler–Maruyama additionally resolves the stiffest mode with `0.1 / λ_max`.
pub fn default_dt(scheme: Scheme, spectrum: &EigenSpectrum) -> f64 {
    match scheme {
        Scheme::ExponentialEuler => DEFAULT_DT,
        Scheme::EulerMaruyama => {
            let lmax = spectrum.lambda_max();
            if lmax > 0.0 {
                DEFAULT_DT.min(0.1 / lmax)
            } else {
                DEFAULT_DT
            }
        }
    }
}

/// Projected drift `P_n b` and noise `P_n(σ(x)·)` of a Galerkin system, plus
/// their directional derivatives for the derivative flow.
pub trait Coefficients: Sync {
    /// Per-worker scratch space.
    type Workspace: Send;

    fn dim(&self) -> usize;

    fn workspace(&self) -> Self::Workspace;

    /// Coefficients of `P_n b(x)`.
    fn drift(&self, x: &[f64], out: &mut [f64], ws: &mut Self::Workspace);

    /// Coefficients of `P_n(σ(x) w)` where `w = Σ dw_i e_i`.
    fn diffusion(&self, x: &[f64], dw: &[f64], out: &mut [f64], ws: &mut Self::Workspace);

    fn has_jacobians(&self) -> bool {
        false
    }

    /// `P_n (∇_h b)(x)`.
    fn drift_jacobian(
        &self,
        _x: &[f64],
        _h: &[f64],
        _out: &mut [f64],
        _ws: &mut Self::Workspace,
    ) -> Result<()> {
        Err(Error::Missing(
            "drift jacobian; use finite differences for this model".into(),
        ))
    }

    /// `P_n ((∇_h σ)(x) w)`.
    fn diffusion_jacobian(
        &self,
        _x: &[f64],
        _h: &[f64],
        _dw: &[f64],
        _out: &mut [f64],
        _ws: &mut Self::Workspace,
    ) -> Result<()> {
        Err(Error::Missing(
            "diffusion jacobian; use finite differences for this model".into(),
        ))
    }
}

/// `b = 0`, `σ ≡ φ₀·Id`: the Ornstein–Uhlenbeck system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveNoise {
    pub n: usize,
    pub phi0: f64,
}

impl Coefficients for AdditiveNoise {
    type Workspace = ();

    fn dim(&self) -> usize {
        self.n
    }

    fn workspace(&self) {}

    fn drift(&self, _x: &[f64], out: &mut [f64], _: &mut ()) {
        out.fill(0.0);
    }

    fn diffusion(&self, _x: &[f64], dw: &[f64], out: &mut [f64], _: &mut ()) {
        for (o, w) in out.iter_mut().zip(dw) {
            *o = self.phi0 * w;
        }
    }

    fn has_jacobians(&self) -> bool {
        true
    }

    fn drift_jacobian(&self, _x: &[f64], _h: &[f64], out: &mut [f64], _: &mut ()) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }

    fn diffusion_jacobian(
        &self,
        _x: &[f64],
        _h: &[f64],
        _dw: &[f64],
        out: &mut [f64],
        _: &mut (),
    ) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
}

/// Per-mode update `x ← decay·x + drift_weight·b(x) + noise_weight·σ(x)ΔW`.
#[derive(Debug, Clone)]
struct StepFactors {
    decay: Vec<f64>,
    drift_weight: Vec<f64>,
    noise_weight: Vec<f64>,
}

impl StepFactors {
    fn new(scheme: Scheme, lambdas: &[f64], dt: f64) -> Self {
        match scheme {
            Scheme::ExponentialEuler => {
                let decay = lambdas.iter().map(|&l| (-l * dt).exp()).collect();
                // (1 − e^{−λdt})/λ and sqrt((1 − e^{−2λdt})/(2λdt)), with their λ → 0 limits.
                let drift_weight = lambdas
                    .iter()
                    .map(|&l| if l > 0.0 { -(-l * dt).exp_m1() / l } else { dt })
                    .collect();
                let noise_weight = lambdas
                    .iter()
                    .map(|&l| {
                        if l > 0.0 {
                            (-(-2.0 * l * dt).exp_m1() / (2.0 * l * dt)).sqrt()
                        } else {
                            1.0
                        }
                    })
                    .collect();
                Self {
                    decay,
                    drift_weight,
                    noise_weight,
                }
            }
            Scheme::EulerMaruyama => Self {
                decay: lambdas.iter().map(|&l| 1.0 - l * dt).collect(),
                drift_weight: vec![dt; lambdas.len()],
                noise_weight: vec![1.0; lambdas.len()],
            },
        }
    }
}

/// Scratch buffers for one path.
struct PathBuffers<W> {
    dw: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
    ws: W,
}

/// Integrates one Galerkin system over `[0, t_end]`.
pub struct Simulator<'a, C: Coefficients> {
    spectrum: &'a EigenSpectrum,
    coeffs: &'a C,
    config: SchemeConfig,
    grid: TimeGrid,
    noise: NoiseStream,
    factors: StepFactors,
}

impl<'a, C: Coefficients> Simulator<'a, C> {
    pub fn new(
        spectrum: &'a EigenSpectrum,
        coeffs: &'a C,
        config: SchemeConfig,
        noise: NoiseStream,
    ) -> Result<Self> {
        if coeffs.dim() != spectrum.len() {
            return Err(Error::Dimension {
                expected: spectrum.len(),
                got: coeffs.dim(),
            });
        }
        let grid = config.grid();
        let factors = StepFactors::new(config.scheme, spectrum.lambdas(), grid.dt);
        Ok(Self {
            spectrum,
            coeffs,
            config,
            grid,
            noise,
            factors,
        })
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn config(&self) -> SchemeConfig {
        self.config
    }

    pub fn noise(&self) -> NoiseStream {
        self.noise
    }

    pub fn spectrum(&self) -> &EigenSpectrum {
        self.spectrum
    }

    pub fn coefficients(&self) -> &C {
        self.coeffs
    }

    fn buffers(&self) -> PathBuffers<C::Workspace> {
        let n = self.n();
        PathBuffers {
            dw: vec![0.0; n],
            drift: vec![0.0; n],
            noise: vec![0.0; n],
            ws: self.coeffs.workspace(),
        }
    }

    fn check(&self, state: &GalerkinState) -> Result<()> {
        self.spectrum.check_state(state)
    }

    fn advance(&self, x: &mut [f64], buf: &mut PathBuffers<C::Workspace>) {
        self.coeffs.drift(x, &mut buf.drift, &mut buf.ws);
        self.coeffs
            .diffusion(x, &buf.dw, &mut buf.noise, &mut buf.ws);
        let f = &self.factors;
        for i in 0..x.len() {
            x[i] = f.decay[i] * x[i]
                + f.drift_weight[i] * buf.drift[i]
                + f.noise_weight[i] * buf.noise[i];
        }
    }

    /// Linearised step for one tangent vector `h` at the pre-step state `x`.
    fn advance_tangent(
        &self,
        x: &[f64],
        h: &mut [f64],
        buf: &mut PathBuffers<C::Workspace>,
    ) -> Result<()> {
        self.coeffs
            .drift_jacobian(x, h, &mut buf.drift, &mut buf.ws)?;
        self.coeffs
            .diffusion_jacobian(x, h, &buf.dw, &mut buf.noise, &mut buf.ws)?;
        let f = &self.factors;
        for i in 0..h.len() {
            h[i] = f.decay[i] * h[i]
                + f.drift_weight[i] * buf.drift[i]
                + f.noise_weight[i] * buf.noise[i];
        }
        Ok(())
    }

    /// One step from `state` with a given Brownian increment vector
    /// (entries are `√dt`-scaled normals).
    pub fn step(&self, state: &GalerkinState, dw: &[f64]) -> Result<GalerkinState> {
        self.check(state)?;
        if dw.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: dw.len(),
            });
        }
        let mut buf = self.buffers();
        buf.dw.copy_from_slice(dw);
        let mut x = state.coeffs().to_vec();
        self.advance(&mut x, &mut buf);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { path: 0, step: 0 });
        }
        Ok(GalerkinState::new(x))
    }

    /// Integrates one path to `t_end`, calling `observe(step, x)` after every
    /// step listed in `observe_at` (ascending; step 0 is the initial state).
    pub fn run_observed(
        &self,
        x0: &GalerkinState,
        path_id: u64,
        observe_at: &[usize],
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<GalerkinState> {
        self.check(x0)?;
        let mut buf = self.buffers();
        let mut rng = self.noise.path(path_id);
        let mut x = x0.coeffs().to_vec();
        let mut next = observe_at.iter().peekable();
        while next.peek() == Some(&&0) {
            observe(0, &x);
            next.next();
        }
        for k in 0..self.grid.steps {
            rng.fill_increments(k as u64, self.grid.dt, &mut buf.dw);
            self.advance(&mut x, &mut buf);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    path: path_id,
                    step: k + 1,
                });
            }
            while next.peek() == Some(&&(k + 1)) {
                observe(k + 1, &x);
                next.next();
            }
        }
        Ok(GalerkinState::new(x))
    }

    /// `X_{t_end}` started from `x0` on path `path_id`.
    pub fn simulate_path(&self, x0: &GalerkinState, path_id: u64) -> Result<GalerkinState> {
        self.run_observed(x0, path_id, &[], |_, _| {})
    }

    /// States at the listed step indices (ascending).
    pub fn simulate_checkpoints(
        &self,
        x0: &GalerkinState,
        path_id: u64,
        steps: &[usize],
    ) -> Result<Vec<GalerkinState>> {
        let mut out = Vec::with_capacity(steps.len());
        self.run_observed(x0, path_id, steps, |_, x| {
            out.push(GalerkinState::new(x.to_vec()))
        })?;
        Ok(out)
    }

    /// `(step, t, coefficients)` every `every` steps, always including the
    /// first and last.
    pub fn trajectory(
        &self,
        x0: &GalerkinState,
        path_id: u64,
        every: usize,
    ) -> Result<Vec<(usize, f64, Vec<f64>)>> {
        let every = every.max(1);
        let steps = self.grid.steps;
        let mut at: Vec<usize> = (0..=steps).step_by(every).collect();
        if at.last() != Some(&steps) {
            at.push(steps);
        }
        let dt = self.grid.dt;
        let mut out = Vec::with_capacity(at.len());
        self.run_observed(x0, path_id, &at, |k, x| {
            out.push((k, k as f64 * dt, x.to_vec()))
        })?;
        Ok(out)
    }

    /// `(X_t, ∇_v X_t)` integrated jointly with identical noise.
    pub fn derivative_flow(
        &self,
        x0: &GalerkinState,
        v: &GalerkinState,
        path_id: u64,
    ) -> Result<(GalerkinState, GalerkinState)> {
        let (x, mut hs) = self.derivative_flow_multi(x0, std::slice::from_ref(v), path_id)?;
        Ok((x, hs.pop().expect("one tangent")))
    }

    /// Derivative flow along several directions sharing one base path.
    pub fn derivative_flow_multi(
        &self,
        x0: &GalerkinState,
        vs: &[GalerkinState],
        path_id: u64,
    ) -> Result<(GalerkinState, Vec<GalerkinState>)> {
        self.derivative_flow_observed(x0, vs, path_id, &[], |_, _, _| {})
    }

    /// Derivative flow with `observe(step, x, tangents)` called after every
    /// step listed in `observe_at` (ascending; step 0 is the initial data).
    pub fn derivative_flow_observed(
        &self,
        x0: &GalerkinState,
        vs: &[GalerkinState],
        path_id: u64,
        observe_at: &[usize],
        mut observe: impl FnMut(usize, &[f64], &[Vec<f64>]),
    ) -> Result<(GalerkinState, Vec<GalerkinState>)> {
        self.check(x0)?;
        for v in vs {
            self.check(v)?;
        }
        if !self.coeffs.has_jacobians() {
            return Err(Error::Missing(
                "coefficient jacobians for the derivative flow; use finite differences".into(),
            ));
        }
        let mut buf = self.buffers();
        let mut rng = self.noise.path(path_id);
        let mut x = x0.coeffs().to_vec();
        let mut hs: Vec<Vec<f64>> = vs.iter().map(|v| v.coeffs().to_vec()).collect();
        let mut next = observe_at.iter().peekable();
        while next.peek() == Some(&&0) {
            observe(0, &x, &hs);
            next.next();
        }
        for k in 0..self.grid.steps {
            rng.fill_increments(k as u64, self.grid.dt, &mut buf.dw);
            for h in hs.iter_mut() {
                self.advance_tangent(&x, h, &mut buf)?;
            }
            self.advance(&mut x, &mut buf);
            if x.iter().chain(hs.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    path: path_id,
                    step: k + 1,
                });
            }
            while next.peek() == Some(&&(k + 1)) {
                observe(k + 1, &x, &hs);
                next.next();
            }
        }
        Ok((
            GalerkinState::new(x),
            hs.into_iter().map(GalerkinState::new).collect(),
        ))
    }

    /// Paths from `x0` and `y0` driven by the same noise addresses.
    pub fn coupled_pair(
        &self,
        x0: &GalerkinState,
        y0: &GalerkinState,
        path_id: u64,
    ) -> Result<(GalerkinState, GalerkinState)> {
        Ok((
            self.simulate_path(x0, path_id)?,
            self.simulate_path(y0, path_id)?,
        ))
    }
}

/// Exact per-mode moments of `dX = −λX dt + φ₀ dβ`:
/// mean `e^{−λt}x₀`, variance `φ₀²(1 − e^{−2λt})/(2λ)` (`φ₀² t` when `λ = 0`).
pub fn ou_exact(x0: &[f64], t: f64, lambdas: &[f64], phi0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if x0.len() != lambdas.len() {
        return Err(Error::Dimension {
            expected: lambdas.len(),
            got: x0.len(),
        });
    }
    let mean = x0
        .iter()
        .zip(lambdas)
        .map(|(x, &l)| (-l * t).exp() * x)
        .collect();
    let var = lambdas
        .iter()
        .map(|&l| {
            if l > 0.0 {
                phi0 * phi0 * -(-2.0 * l * t).exp_m1() / (2.0 * l)
            } else {
                phi0 * phi0 * t
            }
        })
        .collect();
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RectDomain;
    use crate::stats::SampleStats;
    use approx::assert_relative_eq;

    fn interval(n: usize, alpha: f64) -> EigenSpectrum {
        EigenSpectrum::rectangle(RectDomain::unit_interval(), alpha, n).unwrap()
    }

    #[test]
    fn grid_rounds_to_whole_steps() {
        let c = SchemeConfig::new(Scheme::ExponentialEuler, 1.0, 0.3).unwrap();
        let g = c.grid();
        assert_eq!(g.steps, 3);
        assert_relative_eq!(g.dt, 1.0 / 3.0);
        let c = SchemeConfig::new(Scheme::ExponentialEuler, 0.0, 0.1).unwrap();
        assert_eq!(c.grid().steps, 0);
        assert!(SchemeConfig::new(Scheme::ExponentialEuler, 1.0, 0.0).is_err());
    }

    #[test]
    fn default_dt_policy() {
        let s = interval(8, 1.0);
        assert_eq!(default_dt(Scheme::ExponentialEuler, &s), 1e-3);
        assert_relative_eq!(default_dt(Scheme::EulerMaruyama, &s), 0.1 / s.lambda_max());
    }

    #[test]
    fn deterministic_heat_flow() {
        let s = interval(4, 1.0);
        let zero = AdditiveNoise { n: 4, phi0: 0.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.01, 0.01).unwrap();
        let sim = Simulator::new(&s, &zero, cfg, NoiseStream::new(0)).unwrap();
        let x = GalerkinState::new(vec![1.0, -2.0, 0.5, 3.0]);
        let y = sim.step(&x, &[0.3, -0.1, 0.2, 0.9]).unwrap();
        for i in 0..4 {
            assert_relative_eq!(
                y.coeffs()[i],
                (-s.lambdas()[i] * 0.01).exp() * x.coeffs()[i],
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn exponential_mean_is_exact_for_every_dt() {
        let s = interval(3, 1.0);
        let ou = AdditiveNoise { n: 3, phi0: 0.0 };
        for &dt in &[1e-4, 0.01, 0.5] {
            let cfg = SchemeConfig::new(Scheme::ExponentialEuler, dt, dt).unwrap();
            let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(0)).unwrap();
            let x = GalerkinState::new(vec![1.0, 1.0, 1.0]);
            let y = sim.step(&x, &[0.0; 3]).unwrap();
            for i in 0..3 {
                let exact = (-s.lambdas()[i] * dt).exp();
                assert!((y.coeffs()[i] - exact).abs() <= 1e-14 * exact.max(1e-300));
            }
        }
    }

    #[test]
    fn zero_eigenvalue_mode_matches_euler_maruyama() {
        let s = EigenSpectrum::from_eigenvalues(vec![0.0]).unwrap();
        let ou = AdditiveNoise { n: 1, phi0: 0.7 };
        let x = GalerkinState::new(vec![0.4]);
        let mut outs = Vec::new();
        for scheme in [Scheme::ExponentialEuler, Scheme::EulerMaruyama] {
            let cfg = SchemeConfig::new(scheme, 1.0, 0.01).unwrap();
            let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(4)).unwrap();
            outs.push(sim.simulate_path(&x, 3).unwrap());
        }
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let s = interval(2, 1.0);
        let ou = AdditiveNoise { n: 2, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.0, 0.01).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(1)).unwrap();
        let x = GalerkinState::new(vec![0.3, 0.2]);
        assert_eq!(sim.simulate_path(&x, 0).unwrap(), x);
    }

    #[test]
    fn paths_are_reproducible() {
        let s = interval(5, 1.0);
        let ou = AdditiveNoise { n: 5, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.2, 0.01).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(8)).unwrap();
        let x = GalerkinState::unit(5, 0);
        let a = sim.simulate_path(&x, 42).unwrap();
        let b = sim.simulate_path(&x, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sim.simulate_path(&x, 43).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = interval(3, 1.0);
        let ou = AdditiveNoise { n: 2, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.1, 0.01).unwrap();
        assert!(matches!(
            Simulator::new(&s, &ou, cfg, NoiseStream::new(0)),
            Err(Error::Dimension { .. })
        ));
        let ou = AdditiveNoise { n: 3, phi0: 1.0 };
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(0)).unwrap();
        assert!(sim.simulate_path(&GalerkinState::zeros(2), 0).is_err());
    }

    #[test]
    fn single_mode_ou_moments() {
        // n = 1, λ = 1, φ₀ = 1, t = 1, M = 1e5.
        let s = EigenSpectrum::from_eigenvalues(vec![1.0]).unwrap();
        let ou = AdditiveNoise { n: 1, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 1.0, 0.05).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(99)).unwrap();
        let x0 = GalerkinState::new(vec![2.0]);
        let xs: Vec<f64> = (0..100_000u64)
            .map(|p| sim.simulate_path(&x0, p).unwrap().coeffs()[0])
            .collect();
        let st = SampleStats::from_slice(&xs);
        let (mean, var) = ou_exact(&[2.0], 1.0, &[1.0], 1.0).unwrap();
        assert_relative_eq!(var[0], 0.432_332_358_4, max_relative = 1e-9);
        assert!((st.mean - mean[0]).abs() <= 4.0 * st.stderr());
        assert!((st.variance - var[0]).abs() <= 4.0 * st.variance_stderr());
    }

    #[test]
    fn ou_exact_examples() {
        let (m, v) = ou_exact(&[1.5, -2.0], 0.0, &[1.0, 0.0], 3.0).unwrap();
        assert_eq!(m, vec![1.5, -2.0]);
        assert_eq!(v, vec![0.0, 0.0]);
        let (_, v) = ou_exact(&[0.0], 2.5, &[0.0], 2.0).unwrap();
        assert_relative_eq!(v[0], 10.0);
        let (_, v) = ou_exact(&[0.0], 1.0, &[1.0], 1.0).unwrap();
        assert_relative_eq!(v[0], (1.0 - (-2.0f64).exp()) / 2.0);
    }

    #[test]
    fn derivative_flow_of_linear_system_is_the_semigroup() {
        let s = interval(4, 1.0);
        let ou = AdditiveNoise { n: 4, phi0: 1.3 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.05, 1e-3).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(5)).unwrap();
        let v = GalerkinState::new(vec![1.0, -1.0, 2.0, 0.5]);
        let (_, h) = sim
            .derivative_flow(&GalerkinState::zeros(4), &v, 7)
            .unwrap();
        for i in 0..4 {
            let exact = (-s.lambdas()[i] * 0.05).exp() * v.coeffs()[i];
            assert_relative_eq!(h.coeffs()[i], exact, max_relative = 1e-11);
        }
        let (_, h0) = sim
            .derivative_flow(&GalerkinState::zeros(4), &GalerkinState::zeros(4), 7)
            .unwrap();
        assert!(h0.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn coupled_difference_is_deterministic_for_additive_noise() {
        let s = interval(3, 1.0);
        let ou = AdditiveNoise { n: 3, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.1, 1e-3).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(5)).unwrap();
        let x = GalerkinState::new(vec![1.0, 0.0, 0.0]);
        let y = GalerkinState::new(vec![0.0, 1.0, 0.5]);
        let (a, b) = sim.coupled_pair(&x, &y, 3).unwrap();
        let diff = x.axpy(-1.0, &y).unwrap();
        let expected = s.apply_semigroup(0.1, &diff).unwrap();
        for i in 0..3 {
            assert!((a.coeffs()[i] - b.coeffs()[i] - expected.coeffs()[i]).abs() < 1e-12);
        }
        let (a, b) = sim.coupled_pair(&x, &x, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_jacobians_are_reported() {
        struct NoJac;
        impl Coefficients for NoJac {
            type Workspace = ();
            fn dim(&self) -> usize {
                1
            }
            fn workspace(&self) {}
            fn drift(&self, _: &[f64], out: &mut [f64], _: &mut ()) {
                out.fill(0.0)
            }
            fn diffusion(&self, _: &[f64], _: &[f64], out: &mut [f64], _: &mut ()) {
                out.fill(0.0)
            }
        }
        let s = interval(1, 1.0);
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.1, 0.01).unwrap();
        let sim = Simulator::new(&s, &NoJac, cfg, NoiseStream::new(0)).unwrap();
        let x = GalerkinState::zeros(1);
        assert!(matches!(
            sim.derivative_flow(&x, &x, 0),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn trajectory_records_endpoints() {
        let s = interval(2, 1.0);
        let ou = AdditiveNoise { n: 2, phi0: 1.0 };
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.1, 0.01).unwrap();
        let sim = Simulator::new(&s, &ou, cfg, NoiseStream::new(0)).unwrap();
        let x = GalerkinState::new(vec![1.0, 0.0]);
        let tr = sim.trajectory(&x, 0, 3).unwrap();
        let steps: Vec<usize> = tr.iter().map(|r| r.0).collect();
        assert_eq!(steps, vec![0, 3, 6, 9, 10]);
        assert_eq!(tr[0].2, vec![1.0, 0.0]);
        assert_eq!(
            tr.last().unwrap().2,
            sim.simulate_path(&x, 0).unwrap().into_coeffs()
        );
    }
}
