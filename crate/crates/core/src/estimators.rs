//! Monte Carlo estimation of `P_t f`, its directional gradient and variance,
//! statistical checks of the semigroup inequalities, and the Galerkin
//! convergence study.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::TestFunctional;
use crate::noise::NoiseStream;
use crate::parallel::map_indexed;
use crate::regularity::{flow_bound_constant, RegularityProfile};
use crate::simulator::{default_dt, Coefficients, Scheme, SchemeConfig, Simulator};
use crate::spectral::{EigenSpectrum, GalerkinState};
use crate::stats::{combined_stderr, log_stderr, square_stderr, SampleStats};

/// Default slack multiplier of the statistical pass rule.
pub const DEFAULT_SLACK: f64 = 4.0;

/// Monte Carlo settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    pub paths: usize,
    pub scheme: Scheme,
    /// `None` selects [`default_dt`].
    pub dt: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub slack: f64,
}

impl McSettings {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            scheme: Scheme::ExponentialEuler,
            dt: None,
            seed,
            threads: None,
            slack: DEFAULT_SLACK,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl From<&SampleStats> for Estimate {
    fn from(s: &SampleStats) -> Self {
        Self {
            mean: s.mean,
            stderr: s.stderr(),
        }
    }
}

/// One statistical check of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub inequality: String,
    pub t: f64,
    pub lhs_hat: f64,
    pub lhs_se: f64,
    /// Full right-hand side, constant included.
    pub rhs_hat: f64,
    pub rhs_se: f64,
    pub constant_used: f64,
    pub slack: f64,
    pub pass: bool,
    pub paths: usize,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub functional: Option<String>,
    pub direction: Option<String>,
}

/// `lhs − k·se_lhs ≤ rhs + k·se_rhs`.
pub fn statistical_pass(lhs: f64, lhs_se: f64, rhs: f64, rhs_se: f64, k: f64) -> bool {
    lhs - k * lhs_se <= rhs + k * rhs_se
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub second_moment: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
    pub paths: usize,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
}

/// Monte Carlo driver for one Galerkin system.
pub struct Estimator<'a, C: Coefficients> {
    spectrum: &'a EigenSpectrum,
    coeffs: &'a C,
    settings: McSettings,
}

impl<'a, C: Coefficients> Estimator<'a, C> {
    pub fn new(spectrum: &'a EigenSpectrum, coeffs: &'a C, settings: McSettings) -> Result<Self> {
        if settings.paths < 2 {
            return Err(Error::Config(format!(
                "need at least 2 paths, got {}",
                settings.paths
            )));
        }
        if !(settings.slack >= 0.0) {
            return Err(Error::Config(format!(
                "slack must be >= 0, got {}",
                settings.slack
            )));
        }
        if coeffs.dim() != spectrum.len() {
            return Err(Error::Dimension {
                expected: spectrum.len(),
                got: coeffs.dim(),
            });
        }
        Ok(Self {
            spectrum,
            coeffs,
            settings,
        })
    }

    pub fn settings(&self) -> McSettings {
        self.settings
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    fn dt(&self) -> f64 {
        self.settings
            .dt
            .unwrap_or_else(|| default_dt(self.settings.scheme, self.spectrum))
    }

    pub fn simulator(&self, t: f64) -> Result<Simulator<'a, C>> {
        let cfg = SchemeConfig::new(self.settings.scheme, t, self.dt())?;
        Simulator::new(
            self.spectrum,
            self.coeffs,
            cfg,
            NoiseStream::new(self.settings.seed),
        )
    }

    /// Runs `g(path_id)` on every path and returns per-column statistics of
    /// the returned rows. The first failing path (lowest id) is reported.
    fn sample<G>(&self, columns: usize, g: G) -> Result<Vec<SampleStats>>
    where
        G: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
    {
        let rows = map_indexed(self.settings.threads, self.settings.paths, |i| g(i as u64));
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
        let bad: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|v| !v.is_finite()))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            let shown: Vec<String> = bad.iter().take(10).map(|i| i.to_string()).collect();
            return Err(Error::Numerical(format!(
                "non-finite functional values on {} path(s), path_id {}{}",
                bad.len(),
                shown.join(", "),
                if bad.len() > 10 { ", ..." } else { "" }
            )));
        }
        Ok((0..columns)
            .map(|c| {
                let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
                SampleStats::from_slice(&col)
            })
            .collect())
    }

    fn check_inputs(&self, f: &TestFunctional, x: &GalerkinState, t: f64) -> Result<()> {
        self.spectrum.check_state(x)?;
        f.validate(self.n())?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "time must be finite and >= 0, got {t}"
            )));
        }
        Ok(())
    }

    /// Columns `[f, |∇f|²]` of `X_t^x`.
    fn value_and_grad_stats(
        &self,
        f: &TestFunctional,
        x: &GalerkinState,
        t: f64,
    ) -> Result<Vec<SampleStats>> {
        self.check_inputs(f, x, t)?;
        let sim = self.simulator(t)?;
        self.sample(2, |p| {
            let xt = sim.simulate_path(x, p)?;
            Ok(vec![f.eval(&xt), f.grad_norm_sq_slice(xt.coeffs())])
        })
    }

    /// `P_t f(x) = E f(X_t^x)`.
    pub fn mc_expect(&self, f: &TestFunctional, x: &GalerkinState, t: f64) -> Result<Estimate> {
        self.check_inputs(f, x, t)?;
        let sim = self.simulator(t)?;
        let s = self.sample(1, |p| Ok(vec![f.eval(&sim.simulate_path(x, p)?)]))?;
        Ok(Estimate::from(&s[0]))
    }

    /// Samples of `⟨∇f(X_t), ∇_v X_t⟩` and `|∇f(X_t)|²`.
    fn flow_stats(
        &self,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        t: f64,
    ) -> Result<Vec<SampleStats>> {
        self.check_inputs(f, x, t)?;
        self.spectrum.check_state(v)?;
        let sim = self.simulator(t)?;
        self.sample(2, |p| {
            let (xt, h) = sim.derivative_flow(x, v, p)?;
            Ok(vec![
                f.directional_slice(xt.coeffs(), h.coeffs()),
                f.grad_norm_sq_slice(xt.coeffs()),
            ])
        })
    }

    /// `∇_v P_t f(x) = E⟨∇f(X_t), ∇_v X_t⟩`.
    pub fn grad_via_flow(
        &self,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        t: f64,
    ) -> Result<Estimate> {
        Ok(Estimate::from(&self.flow_stats(f, x, v, t)?[0]))
    }

    /// `E (f(X_t^{x+εv}) − f(X_t^x)) / ε` over coupled pairs.
    pub fn grad_via_fd(
        &self,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        eps: f64,
        t: f64,
    ) -> Result<Estimate> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!(
                "finite-difference step must be > 0, got {eps}"
            )));
        }
        self.check_inputs(f, x, t)?;
        let y = x.axpy(eps, v)?;
        let sim = self.simulator(t)?;
        let s = self.sample(1, |p| {
            let (xt, yt) = sim.coupled_pair(x, &y, p)?;
            Ok(vec![(f.eval(&yt) - f.eval(&xt)) / eps])
        })?;
        Ok(Estimate::from(&s[0]))
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        inequality: &str,
        t: f64,
        (lhs_hat, lhs_se): (f64, f64),
        (rhs_hat, rhs_se): (f64, f64),
        constant_used: f64,
        functional: Option<&TestFunctional>,
        direction: Option<&str>,
    ) -> CheckReport {
        let k = self.settings.slack;
        CheckReport {
            inequality: inequality.to_string(),
            t,
            lhs_hat,
            lhs_se,
            rhs_hat,
            rhs_se,
            constant_used,
            slack: k,
            pass: statistical_pass(lhs_hat, lhs_se, rhs_hat, rhs_se, k),
            paths: self.settings.paths,
            dt: self.simulator(t).map(|s| s.grid().dt).unwrap_or(self.dt()),
            n: self.n(),
            seed: self.settings.seed,
            scheme: self.settings.scheme,
            functional: functional.map(|f| f.id()),
            direction: direction.map(str::to_string),
        }
    }

    /// `|∇_v P_t f|² / |v|² ≤ 6^{1+t/t₀} P_t|∇f|²`.
    pub fn check_gradient_bound(
        &self,
        profile: &RegularityProfile,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        direction: &str,
        t: f64,
    ) -> Result<CheckReport> {
        let (lhs, lhs_se, grad_sq) = self.directional_gradient_sq(f, x, v, t)?;
        let c = profile.gradient_constant(t);
        Ok(self.report(
            "gradient",
            t,
            (lhs, lhs_se),
            (c * grad_sq.mean, c * grad_sq.stderr),
            c,
            Some(f),
            Some(direction),
        ))
    }

    /// `(∇_v P_t f)² / |v|²` with its delta-method error, and `P_t|∇f|²`.
    fn directional_gradient_sq(
        &self,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        t: f64,
    ) -> Result<(f64, f64, Estimate)> {
        let v_sq = v.norm_sq();
        if v_sq == 0.0 {
            return Err(Error::Domain("direction v must be nonzero".into()));
        }
        let s = self.flow_stats(f, x, v, t)?;
        let g = Estimate::from(&s[0]);
        Ok((
            g.mean * g.mean / v_sq,
            square_stderr(g.mean, g.stderr) / v_sq,
            Estimate::from(&s[1]),
        ))
    }

    /// `P_t log f(y) ≤ log P_t f(x) + C_LH(t)|x − y|²`, with both sides driven
    /// by the same path ids.
    pub fn check_log_harnack(
        &self,
        profile: &RegularityProfile,
        f: &TestFunctional,
        x: &GalerkinState,
        y: &GalerkinState,
        t: f64,
    ) -> Result<CheckReport> {
        let props = f.properties();
        if !(props.bounded && props.strictly_positive()) {
            return Err(Error::Assumption {
                assumption: "positivity",
                detail: format!(
                    "log-Harnack needs a bounded strictly positive functional, got {f}"
                ),
            });
        }
        self.check_inputs(f, y, t)?;
        let c = profile.logharnack_constant(t)?;
        let dist_sq = x.distance_sq(y)?;
        let sim = self.simulator(t)?;
        let s = self.sample(2, |p| {
            let (xt, yt) = sim.coupled_pair(x, y, p)?;
            Ok(vec![f.eval(&yt).ln(), f.eval(&xt)])
        })?;
        let lhs = Estimate::from(&s[0]);
        let pf = Estimate::from(&s[1]);
        if pf.mean - self.settings.slack * pf.stderr <= 0.0 {
            return Err(Error::Numerical(format!(
                "P_t f(x) = {} is not separated from 0 within {} standard errors",
                pf.mean, self.settings.slack
            )));
        }
        let shift = if dist_sq == 0.0 { 0.0 } else { c * dist_sq };
        Ok(self.report(
            "logharnack",
            t,
            (lhs.mean, lhs.stderr),
            (pf.mean.ln() + shift, log_stderr(pf.mean, pf.stderr)),
            c,
            Some(f),
            None,
        ))
    }

    /// `|∇_v P_t f|² / |v|² ≤ C_LH(t) (P_t f² − (P_t f)²)`.
    pub fn check_variance_gradient(
        &self,
        profile: &RegularityProfile,
        f: &TestFunctional,
        x: &GalerkinState,
        v: &GalerkinState,
        direction: &str,
        t: f64,
    ) -> Result<CheckReport> {
        let c = profile.variance_gradient_constant(t)?;
        let (lhs, lhs_se, _) = self.directional_gradient_sq(f, x, v, t)?;
        let s = self.value_and_grad_stats(f, x, t)?;
        Ok(self.report(
            "variance",
            t,
            (lhs, lhs_se),
            (c * s[0].variance, c * s[0].variance_stderr()),
            c,
            Some(f),
            Some(direction),
        ))
    }

    /// `P_t f² − (P_t f)² ≤ C_P(t) P_t|∇f|²`.
    pub fn check_poincare(
        &self,
        profile: &RegularityProfile,
        f: &TestFunctional,
        x: &GalerkinState,
        t: f64,
    ) -> Result<CheckReport> {
        let c = profile.poincare_constant(t)?;
        let s = self.value_and_grad_stats(f, x, t)?;
        let g = Estimate::from(&s[1]);
        Ok(self.report(
            "poincare",
            t,
            (s[0].variance, s[0].variance_stderr()),
            (c * g.mean, c * g.stderr),
            c,
            Some(f),
            None,
        ))
    }

    /// `E|∇_v X_t|² ≤ 6^{1+t/t₀}|v|²` for every direction and time, from one
    /// joint simulation. Reports are ordered by time, then direction.
    pub fn check_flow_bounds(
        &self,
        profile: &RegularityProfile,
        x: &GalerkinState,
        directions: &[(String, GalerkinState)],
        times: &[f64],
    ) -> Result<Vec<CheckReport>> {
        self.spectrum.check_state(x)?;
        if times.is_empty() || directions.is_empty() {
            return Ok(Vec::new());
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] >= 0.0) {
            return Err(Error::Domain(
                "flow-bound times must be ascending and >= 0".into(),
            ));
        }
        let vs: Vec<GalerkinState> = directions.iter().map(|(_, v)| v.clone()).collect();
        for v in &vs {
            self.spectrum.check_state(v)?;
            if v.norm_sq() == 0.0 {
                return Err(Error::Domain("direction v must be nonzero".into()));
            }
        }
        let t_end = *times.last().expect("nonempty");
        let sim = self.simulator(t_end)?;
        let dt = sim.grid().dt;
        let steps: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
        let cols = times.len() * vs.len();
        let s = self.sample(cols, |p| {
            let mut row = Vec::with_capacity(cols);
            sim.derivative_flow_observed(x, &vs, p, &steps, |_, _, hs| {
                for (h, v) in hs.iter().zip(&vs) {
                    row.push(h.iter().map(|a| a * a).sum::<f64>() / v.norm_sq());
                }
            })?;
            Ok(row)
        })?;
        let mut out = Vec::with_capacity(cols);
        for (ti, (&t, &step)) in times.iter().zip(&steps).enumerate() {
            let t_grid = step as f64 * dt;
            let c = flow_bound_constant(t_grid, profile.t0);
            for (di, (name, _)) in directions.iter().enumerate() {
                let e = Estimate::from(&s[ti * vs.len() + di]);
                let mut r = self.report(
                    "flowbound",
                    t,
                    (e.mean, e.stderr),
                    (c, 0.0),
                    c,
                    None,
                    Some(name),
                );
                r.t = t_grid;
                r.dt = dt;
                out.push(r);
            }
        }
        Ok(out)
    }
}

/// The three test directions: `e₁`, `e_n` and a fixed random unit vector.
pub fn standard_directions(n: usize, noise: NoiseStream) -> Vec<(String, GalerkinState)> {
    let mut v = vec![
        ("e1".to_string(), GalerkinState::unit(n, 0)),
        (format!("e{n}"), GalerkinState::unit(n, n - 1)),
    ];
    v.push((
        "random".to_string(),
        GalerkinState::new(noise.random_unit_vector(n, 0)),
    ));
    v
}

/// `E|X_t^n − X_t^N|²` per `n` in `n_list` (ascending, all `≤ N`), embedding
/// `X^n` into `H_N` by zero padding. `build(n)` returns the n-mode system;
/// `x0` lives in `H_N` and is projected for the smaller systems. All levels
/// share noise addresses.
pub fn convergence_study<C, B>(
    build: B,
    n_max: usize,
    n_list: &[usize],
    x0: &GalerkinState,
    t: f64,
    settings: McSettings,
) -> Result<Vec<ConvergenceRow>>
where
    C: Coefficients,
    B: Fn(usize) -> Result<(EigenSpectrum, C)>,
{
    if n_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("n_list must be strictly ascending".into()));
    }
    if n_list.first() == Some(&0) || n_list.last().is_some_and(|&n| n > n_max) {
        return Err(Error::Config(format!(
            "n_list entries must lie in 1..={n_max}"
        )));
    }
    if x0.n() != n_max {
        return Err(Error::Dimension {
            expected: n_max,
            got: x0.n(),
        });
    }
    if settings.paths < 2 {
        return Err(Error::Config("need at least 2 paths".into()));
    }
    let mut levels: Vec<(EigenSpectrum, C)> = Vec::with_capacity(n_list.len() + 1);
    for &n in n_list {
        levels.push(build(n)?);
    }
    levels.push(build(n_max)?);
    // One common step size: the default for the finest level.
    let dt = settings
        .dt
        .unwrap_or_else(|| default_dt(settings.scheme, &levels[levels.len() - 1].0));
    let noise = NoiseStream::new(settings.seed);
    let sims: Vec<Simulator<'_, C>> = levels
        .iter()
        .map(|(s, c)| Simulator::new(s, c, SchemeConfig::new(settings.scheme, t, dt)?, noise))
        .collect::<Result<_>>()?;
    let starts: Vec<GalerkinState> = n_list
        .iter()
        .map(|&n| x0.project(n))
        .collect::<Result<_>>()?;
    let (fine, coarse) = sims.split_last().expect("at least the reference level");
    let rows = map_indexed(settings.threads, settings.paths, |p| -> Result<Vec<f64>> {
        let reference = fine.simulate_path(x0, p as u64)?;
        coarse
            .iter()
            .zip(&starts)
            .map(|(sim, x)| {
                let xn = sim.simulate_path(x, p as u64)?.zero_pad(n_max)?;
                xn.distance_sq(&reference)
            })
            .collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let s = SampleStats::from_slice(&col);
            ConvergenceRow {
                n,
                error: s.mean,
                stderr: s.stderr(),
            }
        })
        .collect())
}

/// Closed-form `E|X_t^n − X_t^N|²` for `b = 0`, `σ ≡ φ₀·Id`:
/// `Σ_{n<i≤N} (e^{−2λ_i t} x_i² + φ₀²(1 − e^{−2λ_i t})/(2λ_i))`.
pub fn ou_truncation_error(x0: &[f64], lambdas: &[f64], n: usize, t: f64, phi0: f64) -> f64 {
    x0.iter()
        .zip(lambdas)
        .skip(n)
        .map(|(x, &l)| {
            let var = if l > 0.0 {
                phi0 * phi0 * -(-2.0 * l * t).exp_m1() / (2.0 * l)
            } else {
                phi0 * phi0 * t
            };
            (-2.0 * l * t).exp() * x * x + var
        })
        .sum()
}

/// Checks that a convergence table decreases, each step by more than
/// `k` combined standard errors.
pub fn strictly_decreasing(rows: &[ConvergenceRow], k: f64) -> bool {
    rows.windows(2)
        .all(|w| w[0].error - w[1].error > k * combined_stderr(w[0].stderr, w[1].stderr))
}

/// `E|X_t|²` with its standard error at each checkpoint time (ascending,
/// within `[0, t_end]` of the simulator).
pub fn second_moment_table<C: Coefficients>(
    sim: &Simulator<'_, C>,
    x0: &GalerkinState,
    checkpoints: &[f64],
    paths: usize,
    threads: Option<usize>,
) -> Result<MomentTable> {
    if paths < 1 {
        return Err(Error::Config("need at least one path".into()));
    }
    let grid = sim.grid();
    let t_end = grid.steps as f64 * grid.dt;
    let mut steps = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        if !(t >= 0.0) || t > t_end * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "checkpoint {t} outside [0, {t_end}]"
            )));
        }
        let k = if grid.steps == 0 {
            0
        } else {
            (t / grid.dt).round() as usize
        };
        steps.push(k.min(grid.steps));
    }
    if steps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "checkpoints must map to strictly ascending steps".into(),
        ));
    }
    let rows = map_indexed(threads, paths, |p| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(steps.len());
        sim.run_observed(x0, p as u64, &steps, |_, x| {
            out.push(x.iter().map(|a| a * a).sum());
        })
        .map_err(|e| match e {
            Error::NonFinite { path, step } => Error::Numerical(format!(
                "moments blew up on path {path} at t = {}",
                step as f64 * grid.dt
            )),
            other => other,
        })?;
        Ok(out)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let table = steps
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let s = SampleStats::from_slice(&col);
            MomentRow {
                t: k as f64 * grid.dt,
                second_moment: s.mean,
                stderr: s.stderr(),
            }
        })
        .collect();
    Ok(MomentTable {
        rows: table,
        paths,
        dt: grid.dt,
        n: sim.n(),
        seed: sim.noise().seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::KernelSpec;
    use crate::simulator::AdditiveNoise;
    use crate::spectral::RectDomain;
    use approx::assert_relative_eq;

    fn ou(n: usize) -> (EigenSpectrum, AdditiveNoise) {
        (
            EigenSpectrum::rectangle(RectDomain::unit_interval(), 1.0, n).unwrap(),
            AdditiveNoise { n, phi0: 1.0 },
        )
    }

    fn ou_profile() -> RegularityProfile {
        RegularityProfile::new(
            KernelSpec::constant(0.0).unwrap(),
            KernelSpec::constant(0.0).unwrap(),
            1.0,
            Some(1.0),
        )
        .unwrap()
    }

    fn settings(paths: usize) -> McSettings {
        McSettings {
            dt: Some(0.01),
            threads: Some(1),
            ..McSettings::new(paths, 7)
        }
    }

    #[test]
    fn expectation_basics() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(200)).unwrap();
        let x = GalerkinState::new(vec![0.5, -0.2, 0.1, 0.0]);
        let lin = TestFunctional::Linear { mode: 1 };
        let e = est.mc_expect(&lin, &x, 0.0).unwrap();
        assert_eq!((e.mean, e.stderr), (0.5, 0.0));
        let one = TestFunctional::Constant { value: 1.0 };
        let e = est.mc_expect(&one, &x, 0.3).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
        assert!(Estimator::new(&s, &c, settings(1)).is_err());
    }

    #[test]
    fn ou_mean_within_four_stderr() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(4000)).unwrap();
        let x = GalerkinState::new(vec![1.0, 0.0, 0.0, 0.0]);
        let t = 0.05;
        let e = est
            .mc_expect(&TestFunctional::Linear { mode: 1 }, &x, t)
            .unwrap();
        let exact = (-s.lambdas()[0] * t).exp();
        assert!((e.mean - exact).abs() <= 4.0 * e.stderr, "{e:?} vs {exact}");
    }

    #[test]
    fn flow_gradient_is_exact_for_ou() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(50)).unwrap();
        let x = GalerkinState::new(vec![0.3, 0.0, 0.1, 0.0]);
        let v = GalerkinState::unit(4, 0);
        let lin = TestFunctional::Linear { mode: 1 };
        let g = est.grad_via_flow(&lin, &x, &v, 0.1).unwrap();
        assert_relative_eq!(g.mean, (-s.lambdas()[0] * 0.1).exp(), max_relative = 1e-12);
        assert_eq!(g.stderr, 0.0);
        let g0 = est
            .grad_via_flow(&TestFunctional::Sin { mode: 1 }, &x, &v, 0.0)
            .unwrap();
        assert_eq!(g0.mean, 0.3f64.cos());
        let fd = est.grad_via_fd(&lin, &x, &v, 1e-3, 0.1).unwrap();
        assert_relative_eq!(fd.mean, (-s.lambdas()[0] * 0.1).exp(), max_relative = 1e-9);
        let zero = est
            .grad_via_fd(
                &TestFunctional::Sin { mode: 2 },
                &x,
                &GalerkinState::zeros(4),
                1e-3,
                0.1,
            )
            .unwrap();
        assert_eq!(zero.mean, 0.0);
    }

    #[test]
    fn constant_functionals_degenerate_exactly() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(100)).unwrap();
        let p = ou_profile();
        let x = GalerkinState::new(vec![0.3, 0.0, 0.1, 0.0]);
        let v = GalerkinState::unit(4, 0);
        let f = TestFunctional::Constant { value: 2.0 };
        let reports = [
            est.check_gradient_bound(&p, &f, &x, &v, "e1", 0.1).unwrap(),
            est.check_log_harnack(&p, &f, &x, &x, 0.1).unwrap(),
            est.check_variance_gradient(&p, &f, &x, &v, "e1", 0.1)
                .unwrap(),
            est.check_poincare(&p, &f, &x, 0.1).unwrap(),
        ];
        for r in &reports {
            assert!(r.pass, "{r:?}");
            assert_eq!(r.lhs_hat, r.rhs_hat.min(r.lhs_hat));
            assert_eq!(r.lhs_se, 0.0);
        }
        assert_eq!(reports[1].lhs_hat, 2f64.ln());
        assert_eq!(reports[1].rhs_hat, 2f64.ln());
        assert_eq!(reports[0].lhs_hat, 0.0);
        assert_eq!(reports[3].lhs_hat, 0.0);
    }

    #[test]
    fn jensen_holds_sample_by_sample() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(300)).unwrap();
        let x = GalerkinState::new(vec![0.3, 0.2, 0.1, 0.0]);
        let f = TestFunctional::ShiftedSin {
            shift: 2.0,
            mode: 1,
        };
        let r = est
            .check_log_harnack(&ou_profile(), &f, &x, &x, 0.2)
            .unwrap();
        assert!(r.lhs_hat <= r.rhs_hat);
        assert!(r.pass);
        let bad =
            est.check_log_harnack(&ou_profile(), &TestFunctional::Sin { mode: 1 }, &x, &x, 0.2);
        assert!(matches!(bad, Err(Error::Assumption { .. })));
    }

    #[test]
    fn ou_checks_hold_analytically() {
        // Linear functional on OU: |∇P_t f|² = e^{−2λ₁t}, Var = (1−e^{−2λ₁t})/(2λ₁).
        let (s, _) = ou(4);
        let p = ou_profile();
        let l1 = s.lambdas()[0];
        for &t in &[0.01, 0.1, 1.0, 5.0] {
            let grad_sq = (-2.0 * l1 * t).exp();
            let var = -(-2.0 * l1 * t).exp_m1() / (2.0 * l1);
            assert!(grad_sq <= p.gradient_constant(t));
            assert!(grad_sq <= p.variance_gradient_constant(t).unwrap() * var);
            assert!(var <= p.poincare_constant(t).unwrap());
        }
    }

    #[test]
    fn ou_checks_pass_statistically() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(2000)).unwrap();
        let p = ou_profile();
        let x = GalerkinState::new(vec![0.3, 0.0, 0.1, 0.0]);
        let v = GalerkinState::unit(4, 0);
        let f = TestFunctional::Linear { mode: 1 };
        assert!(
            est.check_gradient_bound(&p, &f, &x, &v, "e1", 0.1)
                .unwrap()
                .pass
        );
        assert!(
            est.check_variance_gradient(&p, &f, &x, &v, "e1", 0.1)
                .unwrap()
                .pass
        );
        assert!(est.check_poincare(&p, &f, &x, 0.1).unwrap().pass);
        let r0 = est.check_poincare(&p, &f, &x, 0.0).unwrap();
        assert_eq!((r0.lhs_hat, r0.rhs_hat), (0.0, 0.0));
        assert!(r0.pass);
        let no_bar = RegularityProfile {
            lambda_bar_sigma: None,
            ..p
        };
        assert!(matches!(
            est.check_poincare(&no_bar, &f, &x, 0.1),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn variance_and_harnack_share_the_constant() {
        let p = ou_profile();
        for &t in &[0.05, 0.2, 3.0] {
            let a = p.variance_gradient_constant(t).unwrap();
            let b = p.logharnack_constant(t).unwrap();
            assert!((a - b).abs() <= 1e-15 * b);
        }
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let (s, c) = ou(4);
        let x = GalerkinState::new(vec![0.3, 0.0, 0.1, 0.0]);
        let f = TestFunctional::Sin { mode: 1 };
        let run = |threads| {
            let mut st = settings(500);
            st.threads = Some(threads);
            let est = Estimator::new(&s, &c, st).unwrap();
            serde_json::to_string(&est.check_poincare(&ou_profile(), &f, &x, 0.2).unwrap()).unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn flow_bound_reports() {
        let (s, c) = ou(4);
        let est = Estimator::new(&s, &c, settings(10)).unwrap();
        let x = GalerkinState::zeros(4);
        let dirs = standard_directions(4, NoiseStream::new(7));
        let r = est
            .check_flow_bounds(&ou_profile(), &x, &dirs, &[0.05, 0.1])
            .unwrap();
        assert_eq!(r.len(), 6);
        assert_relative_eq!(
            r[0].lhs_hat,
            (-2.0 * s.lambdas()[0] * 0.05).exp(),
            max_relative = 1e-12
        );
        assert!(r.iter().all(|r| r.pass && r.constant_used == 6.0));
    }

    #[test]
    fn convergence_matches_tail_sum() {
        let n_max = 16;
        let x0 = GalerkinState::new((0..n_max).map(|i| 1.0 / (i + 1) as f64).collect());
        let rows = convergence_study(
            |n| Ok(ou(n)),
            n_max,
            &[2, 4, 8, 16],
            &x0,
            0.05,
            settings(2000),
        )
        .unwrap();
        let (s, _) = ou(n_max);
        for r in &rows[..3] {
            let exact = ou_truncation_error(x0.coeffs(), s.lambdas(), r.n, 0.05, 1.0);
            assert!(
                (r.error - exact).abs() <= 4.0 * r.stderr,
                "{r:?} vs {exact}"
            );
        }
        assert_eq!(rows[3].error, 0.0);
        assert!(strictly_decreasing(&rows, 2.0));
        assert!(convergence_study(|n| Ok(ou(n)), n_max, &[4, 2], &x0, 0.05, settings(10)).is_err());
    }

    #[test]
    fn moment_table_at_zero_horizon() {
        let (s, c) = ou(3);
        let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.0, 0.01).unwrap();
        let sim = Simulator::new(&s, &c, cfg, NoiseStream::new(1)).unwrap();
        let x0 = GalerkinState::new(vec![1.0, 2.0, 0.5]);
        let tab = second_moment_table(&sim, &x0, &[0.0], 10, None).unwrap();
        assert_eq!(tab.rows.len(), 1);
        assert_eq!(tab.rows[0].second_moment, 5.25);
        assert_eq!(tab.rows[0].stderr, 0.0);
    }
}
