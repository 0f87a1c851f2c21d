//! Subcommand implementations. Each returns the primary output text plus a
//! verdict that `main` maps to the exit code.

use std::path::PathBuf;

use serde::Serialize;
use spdelab_core::estimators::{standard_directions, CheckReport, ConvergenceRow};
use spdelab_core::parallel::map_indexed;
use spdelab_core::reaction_diffusion::{moment_harness, GrowthCheck, MomentReport, PlateauVerdict};
use spdelab_core::regularity::EpsIntegrability;
use spdelab_core::report::{constants_table, f64_or_inf};
use spdelab_core::{
    convergence_study, CriticalTime, Estimator, GalerkinState, McSettings, NoiseStream,
    ReactionDiffusionModel, SchemeConfig, Simulator, TestFunctional,
};

use crate::config::{resolve_state, CheckKind, ExperimentConfig};
use crate::error::{CliError, CliResult};

/// Global overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A statistical check failed.
    Fail,
    /// A required assumption does not hold.
    Assumption(String),
}

#[derive(Debug, Clone)]
pub struct Output {
    pub text: String,
    pub verdict: Verdict,
    /// Additional files requested by the experiment.
    pub files: Vec<(PathBuf, String)>,
}

impl Output {
    fn pass(text: String) -> Self {
        Self {
            text,
            verdict: Verdict::Pass,
            files: Vec::new(),
        }
    }
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn settings(cfg: &ExperimentConfig, ov: Overrides, paths: Option<usize>) -> CliResult<McSettings> {
    let paths = paths.unwrap_or(cfg.paths);
    if paths < 2 {
        return Err(CliError::Config("paths must be at least 2".into()));
    }
    Ok(McSettings {
        paths,
        scheme: cfg.scheme,
        dt: cfg.dt,
        seed: ov.seed.unwrap_or(cfg.seed),
        threads: ov.threads,
        slack: cfg.slack,
    })
}

#[derive(Debug, Serialize)]
struct KernelSample {
    t: f64,
    kb: f64,
    ksigma: f64,
    phi_b: f64,
    phi_sigma: f64,
}

#[derive(Debug, Serialize)]
struct AssumptionVerdict {
    name: &'static str,
    holds: bool,
    required: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct ValidateReport<'a> {
    model: &'a ReactionDiffusionModel,
    t0: CriticalTime,
    #[serde(skip_serializing_if = "Option::is_none")]
    t0_note: Option<String>,
    lambda_sigma: f64,
    lambda_bar_sigma: Option<f64>,
    #[serde(serialize_with = "f64_or_inf")]
    phi_b_infinity: f64,
    #[serde(serialize_with = "f64_or_inf")]
    phi_sigma_infinity: f64,
    kernels: Vec<KernelSample>,
    eps: f64,
    eps_integrability: EpsIntegrabilityReport,
    assumptions: Vec<AssumptionVerdict>,
}

#[derive(Debug, Serialize)]
struct EpsIntegrabilityReport {
    finite: bool,
    #[serde(serialize_with = "f64_or_inf")]
    value: f64,
}

impl From<EpsIntegrability> for EpsIntegrabilityReport {
    fn from(e: EpsIntegrability) -> Self {
        Self {
            finite: e.finite,
            value: e.value,
        }
    }
}

pub fn validate(cfg: &ExperimentConfig, model: &ReactionDiffusionModel) -> CliResult<Output> {
    let profile = model.profile()?;
    let kernels = cfg
        .validate
        .t
        .iter()
        .map(|&t| {
            Ok(KernelSample {
                t,
                kb: profile.kb.eval(t)?,
                ksigma: profile.ksigma.eval(t)?,
                phi_b: profile.kb.phi(t)?,
                phi_sigma: profile.ksigma.phi(t)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let needs_a2 = cfg.check.which.iter().any(|k| k.needs_ellipticity());
    let needs_bar = cfg.check.which.iter().any(|k| k.needs_upper_bound());
    let d = model.domain.dim();
    let audit = model.psi.audit().and_then(|_| model.phi.audit());
    let mut assumptions = vec![
        AssumptionVerdict {
            name: "A1",
            holds: profile.kb.phi(1.0)?.is_finite(),
            required: true,
            detail: format!(
                "K_b = {} (Lipschitz constant of psi squared)",
                model.psi.lipschitz_c.powi(2)
            ),
        },
        AssumptionVerdict {
            name: "A2",
            holds: profile.lambda_sigma > 0.0,
            required: needs_a2,
            detail: format!("lambda(sigma) = inf phi^2 = {}", profile.lambda_sigma),
        },
        AssumptionVerdict {
            name: "A3",
            holds: model.alpha > d as f64 / 2.0 && profile.ksigma.phi(1.0)?.is_finite(),
            required: true,
            detail: format!(
                "alpha = {} > d/2 = {}; K_sigma summed over exact rectangle modes",
                model.alpha,
                d as f64 / 2.0
            ),
        },
        AssumptionVerdict {
            name: "A4",
            holds: true,
            required: true,
            detail: "Dirichlet sine eigenbasis of the rectangle".into(),
        },
        AssumptionVerdict {
            name: "LIP",
            holds: audit.is_ok(),
            required: true,
            detail: match &audit {
                Ok(()) => "declared Lipschitz constants and bounds agree with samples".into(),
                Err(e) => e.to_string(),
            },
        },
        AssumptionVerdict {
            name: "upper_bound",
            holds: profile.lambda_bar_sigma.is_some(),
            required: needs_bar,
            detail: match profile.lambda_bar_sigma {
                Some(v) => format!("lambda_bar(sigma) = sup phi^2 = {v}"),
                None => "phi is unbounded; no lambda_bar(sigma)".into(),
            },
        },
    ];
    assumptions.push(AssumptionVerdict {
        name: "t0",
        holds: profile.t0.as_f64() > 0.0,
        required: true,
        detail: format!("t0 = {}", profile.t0),
    });
    let failed: Vec<&str> = assumptions
        .iter()
        .filter(|a| a.required && !a.holds)
        .map(|a| a.name)
        .collect();
    let report = ValidateReport {
        model,
        t0: profile.t0,
        t0_note: profile.t0_note.clone(),
        lambda_sigma: profile.lambda_sigma,
        lambda_bar_sigma: profile.lambda_bar_sigma,
        phi_b_infinity: profile.kb.phi_infinity()?,
        phi_sigma_infinity: profile.ksigma.phi_infinity()?,
        kernels,
        eps: cfg.validate.eps,
        eps_integrability: profile
            .ksigma
            .epsilon_integrability(cfg.validate.eps)?
            .into(),
        assumptions,
    };
    Ok(Output {
        text: json(&report)?,
        verdict: if failed.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Assumption(failed.join(", "))
        },
        files: Vec::new(),
    })
}

pub fn constants(cfg: &ExperimentConfig, model: &ReactionDiffusionModel) -> CliResult<Output> {
    let profile = model.profile()?;
    Ok(Output::pass(json(&constants_table(
        &profile,
        &cfg.constants.t,
    )?)?))
}

fn default_functional(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Logharnack => "shifted_sin:2:1",
        _ => "sin:1",
    }
}

fn directions(
    names: Option<&Vec<String>>,
    n: usize,
    noise: NoiseStream,
) -> CliResult<Vec<(String, GalerkinState)>> {
    let standard = standard_directions(n, noise);
    let Some(names) = names else {
        return Ok(standard);
    };
    names
        .iter()
        .map(|name| match name.as_str() {
            "random" => Ok(standard[2].clone()),
            "en" => Ok(standard[1].clone()),
            other => {
                let state = crate::config::StateSpec::Named(other.to_string()).resolve(n)?;
                Ok((other.to_string(), state))
            }
        })
        .collect()
}

pub fn check(
    cfg: &ExperimentConfig,
    model: &ReactionDiffusionModel,
    kind: CheckKind,
    ov: Overrides,
) -> CliResult<Output> {
    let sec = &cfg.check;
    let profile = model.profile()?;
    let sys = model.system()?;
    let n = model.n;
    let st = settings(cfg, ov, sec.paths)?;
    let est = Estimator::new(&sys.spectrum, &sys.coeffs, st)?;
    let f = TestFunctional::parse(
        sec.functional
            .as_deref()
            .unwrap_or(default_functional(kind)),
    )?;
    let x = resolve_state(sec.x.as_ref(), n)?;
    let times = sec.t.clone().unwrap_or_else(|| vec![0.05, 0.2]);
    let dirs = directions(sec.directions.as_ref(), n, NoiseStream::new(st.seed))?;
    let mut reports: Vec<CheckReport> = Vec::new();
    match kind {
        CheckKind::Gradient | CheckKind::Variance => {
            for &t in &times {
                for (name, v) in &dirs {
                    reports.push(if kind == CheckKind::Gradient {
                        est.check_gradient_bound(&profile, &f, &x, v, name, t)?
                    } else {
                        est.check_variance_gradient(&profile, &f, &x, v, name, t)?
                    });
                }
            }
        }
        CheckKind::Logharnack => {
            let y = match &sec.y {
                Some(y) => y.resolve(n)?,
                None => x.axpy(0.5, &GalerkinState::unit(n, 0))?,
            };
            for &t in &times {
                reports.push(est.check_log_harnack(&profile, &f, &x, &y, t)?);
            }
        }
        CheckKind::Poincare => {
            for &t in &times {
                reports.push(est.check_poincare(&profile, &f, &x, t)?);
            }
        }
        CheckKind::Flowbound => {
            reports = est.check_flow_bounds(&profile, &x, &dirs, &times)?;
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(Output {
        text: json(&reports)?,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        files: Vec::new(),
    })
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

pub fn converge_rows(
    cfg: &ExperimentConfig,
    model: &ReactionDiffusionModel,
    ov: Overrides,
) -> CliResult<Vec<ConvergenceRow>> {
    let sec = cfg
        .converge
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [converge] section".into()))?;
    let st = settings(cfg, ov, sec.paths)?;
    let x0 = resolve_state(sec.x0.as_ref(), sec.n_max)?;
    let rows = convergence_study(
        |n| {
            let sys = model.with_modes(n)?.system()?;
            Ok((sys.spectrum, sys.coeffs))
        },
        sec.n_max,
        &sec.n_list,
        &x0,
        sec.t,
        st,
    )?;
    Ok(rows)
}

pub fn converge(
    cfg: &ExperimentConfig,
    model: &ReactionDiffusionModel,
    ov: Overrides,
) -> CliResult<Output> {
    let rows = converge_rows(cfg, model, ov)?;
    let header = ["n", "error", "stderr"].map(String::from);
    let text = csv_text(
        &header,
        rows.iter()
            .map(|r| vec![r.n.to_string(), r.error.to_string(), r.stderr.to_string()]),
    )?;
    Ok(Output::pass(text))
}

#[derive(Debug, Serialize)]
struct InvariantReport {
    growth: GrowthCheck,
    eps: f64,
    eps_integrability: EpsIntegrabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    moments: Option<MomentReport>,
}

pub fn invariant(
    cfg: &ExperimentConfig,
    model: &ReactionDiffusionModel,
    ov: Overrides,
) -> CliResult<Output> {
    let sec = cfg
        .invariant
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [invariant] section".into()))?;
    let growth = model.check_growth_condition(sec.eps0, sec.c0)?;
    let eps_integrability = model
        .exact_ksigma()?
        .epsilon_integrability(cfg.validate.eps)?
        .into();
    let mut report = InvariantReport {
        growth,
        eps: cfg.validate.eps,
        eps_integrability,
        moments: None,
    };
    if !growth.holds {
        return Ok(Output {
            text: json(&report)?,
            verdict: Verdict::Assumption("DW".into()),
            files: Vec::new(),
        });
    }
    let st = settings(cfg, ov, sec.paths)?;
    let sys = model.system()?;
    let dt = st
        .dt
        .unwrap_or_else(|| spdelab_core::simulator::default_dt(st.scheme, &sys.spectrum));
    let sim = Simulator::new(
        &sys.spectrum,
        &sys.coeffs,
        SchemeConfig::new(st.scheme, sec.t_end, dt)?,
        NoiseStream::new(st.seed),
    )?;
    let checkpoints = match &sec.checkpoints {
        Some(c) => c.clone(),
        None if sec.t_end == 0.0 => vec![0.0],
        None => (1..=10).map(|i| sec.t_end * i as f64 / 10.0).collect(),
    };
    let x0 = resolve_state(sec.x0.as_ref(), model.n)?;
    let moments = moment_harness(
        model,
        &sim,
        &x0,
        &checkpoints,
        st.paths,
        st.threads,
        sec.eps0,
        sec.c0,
    )?;
    let verdict = match moments.verdict {
        PlateauVerdict::NotBounded => Verdict::Fail,
        _ => Verdict::Pass,
    };
    report.moments = Some(moments);
    Ok(Output {
        text: json(&report)?,
        verdict,
        files: Vec::new(),
    })
}

pub fn dump_trajectories(
    cfg: &ExperimentConfig,
    model: &ReactionDiffusionModel,
    ov: Overrides,
    base: &std::path::Path,
) -> CliResult<Output> {
    let sec = cfg
        .trajectories
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [trajectories] section".into()))?;
    let st = settings(cfg, ov, Some(sec.paths.max(2)))?;
    let sys = model.system()?;
    let dt = st
        .dt
        .unwrap_or_else(|| spdelab_core::simulator::default_dt(st.scheme, &sys.spectrum));
    let sim = Simulator::new(
        &sys.spectrum,
        &sys.coeffs,
        SchemeConfig::new(st.scheme, sec.t_end, dt)?,
        NoiseStream::new(st.seed),
    )?;
    let x0 = resolve_state(sec.x0.as_ref(), model.n)?;
    let paths = map_indexed(st.threads, sec.paths, |p| {
        sim.trajectory(&x0, p as u64, sec.every)
    });
    let paths = paths.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["path_id".to_string(), "step".into(), "t".into()];
    header.extend((0..model.n).map(|i| format!("coeff_{i}")));
    let rows = paths.iter().enumerate().flat_map(|(p, traj)| {
        traj.iter().map(move |(step, t, c)| {
            let mut r = vec![p.to_string(), step.to_string(), t.to_string()];
            r.extend(c.iter().map(|v| v.to_string()));
            r
        })
    });
    let text = csv_text(&header, rows)?;
    let mut files = Vec::new();
    if let Some(out) = &sec.field_out {
        let last = paths
            .first()
            .and_then(|traj| traj.last())
            .map(|(_, _, c)| GalerkinState::new(c.clone()))
            .unwrap_or_else(|| x0.clone());
        let field = model.field_on_grid(&sys.spectrum, &last, sec.field_points.unwrap_or(101))?;
        let d = model.domain.dim();
        let mut fheader: Vec<String> = if d == 1 {
            vec!["xi".into()]
        } else {
            (0..d).map(|i| format!("xi_{i}")).collect()
        };
        fheader.push("u(xi)".into());
        let ftext = csv_text(
            &fheader,
            field.iter().map(|(xi, u)| {
                let mut r: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
                r.push(u.to_string());
                r
            }),
        )?;
        files.push((base.join(out), ftext));
    }
    Ok(Output {
        text,
        verdict: Verdict::Pass,
        files,
    })
}
