use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const RD_MODEL: &str = r#"
[domain]
sides = [[0.0, 1.0]]

[alpha]
value = 2.0

[psi]
form = "atan_scaled"
a = 0.5

[phi]
form = "sin_perturbed"
c0 = 1.0
amp = 0.1
freq = 1.0

[galerkin]
n = 8
"#;

struct Workdir {
    dir: tempfile::TempDir,
}

impl Workdir {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }
}

fn spdelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdelab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_model_is_a_config_error() {
    let w = Workdir::new();
    w.write("model.toml", "");
    let cfg = w.write("exp.toml", "model = \"model.toml\"\n");
    let out = spdelab(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_keys_are_rejected() {
    let w = Workdir::new();
    let cfg = w.write("exp.toml", "preset = \"ou\"\npathz = 10\n");
    assert_eq!(spdelab(&["constants", arg(&cfg)]).status.code(), Some(2));
    let cfg = w.write("exp2.toml", "preset = \"heat\"\n");
    assert_eq!(spdelab(&["constants", arg(&cfg)]).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_reported() {
    let out = spdelab(&["constants", "/nonexistent/exp.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn poincare_needs_bounded_noise() {
    let w = Workdir::new();
    w.write(
        "model.toml",
        &RD_MODEL.replace(
            "form = \"sin_perturbed\"\nc0 = 1.0\namp = 0.1\nfreq = 1.0",
            "form = \"affine\"\na = 0.1\nb = 1.0\ninf_sq = 0.5",
        ),
    );
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\npaths = 50\n[check]\nwhich = [\"poincare\"]\nt = [0.05]\n",
    );
    let out = spdelab(&["check", "poincare", arg(&cfg)]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // validate flags the missing upper bound as a required assumption.
    let out = spdelab(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    let ub = v["assumptions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["name"] == "upper_bound")
        .unwrap();
    assert_eq!(ub["holds"], false);
    assert_eq!(ub["required"], true);
}

#[test]
fn logharnack_at_equal_points_with_constant_functional_passes() {
    let w = Workdir::new();
    w.write("model.toml", RD_MODEL);
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\npaths = 200\n[check]\nfunctional = \"constant:2\"\nx = \"zero\"\ny = \"zero\"\nt = [0.05, 0.2]\n",
    );
    let out = spdelab(&["check", "logharnack", arg(&cfg)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    for r in v.as_array().unwrap() {
        assert_eq!(r["lhs_hat"], r["rhs_hat"]);
        assert_eq!(r["lhs_hat"].as_f64().unwrap(), 2f64.ln());
        assert_eq!(r["pass"], true);
        assert_eq!(r["functional"], "constant:2");
    }
}

#[test]
fn logharnack_rejects_non_positive_functional() {
    let w = Workdir::new();
    w.write("model.toml", RD_MODEL);
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\npaths = 50\n[check]\nfunctional = \"sin:1\"\n",
    );
    assert_eq!(
        spdelab(&["check", "logharnack", arg(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn constants_follow_the_limit_convention() {
    let w = Workdir::new();
    let cfg = w.write("exp.toml", "preset = \"ou\"\n[constants]\nt = [0.0, 1.5]\n");
    let out = spdelab(&["constants", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["t0"], "inf");
    assert_eq!(v["lambda_sigma"], 1.0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["gradient_constant"], 6.0);
    assert_eq!(rows[0]["logharnack_constant"], "inf");
    assert_eq!(rows[0]["poincare_constant"], 0.0);
    assert_eq!(rows[1]["gradient_constant"], 6.0);
    let lh = rows[1]["logharnack_constant"].as_f64().unwrap();
    assert!((lh - 2.0).abs() < 1e-12, "{lh}");
    let pc = rows[1]["poincare_constant"].as_f64().unwrap();
    // 12 λ̄ t₀(6^{t/t₀} − 1)/ln 6 tends to 12 λ̄ t.
    assert!((pc - 12.0 * 1.5).abs() < 1e-12, "{pc}");
}

#[test]
fn validate_reports_reference_model() {
    let w = Workdir::new();
    w.write("model.toml", RD_MODEL);
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\n[validate]\nt = [0.001]\n",
    );
    let out = spdelab(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let t0 = v["t0"].as_f64().unwrap();
    assert!((t0 - 0.66622).abs() < 1e-4, "{t0}");
    let ks = v["kernels"][0]["ksigma"].as_f64().unwrap();
    assert!((ks - 0.01735).abs() < 5e-6, "{ks}");
    assert_eq!(v["eps_integrability"]["finite"], true);
    assert!(v["assumptions"]
        .as_array()
        .unwrap()
        .iter()
        .all(|a| a["holds"] == true));
}

#[test]
fn converge_writes_csv() {
    let w = Workdir::new();
    let cfg = w.write(
        "exp.toml",
        "preset = \"ou\"\n[converge]\nn_list = [2, 4]\nn_max = 8\nt = 0.05\npaths = 50\n",
    );
    let out = spdelab(&["converge", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,error,stderr");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,"));
    assert!(lines[2].starts_with("4,"));
}

#[test]
fn superlinear_reaction_fails_growth_condition() {
    let w = Workdir::new();
    w.write(
        "model.toml",
        &RD_MODEL.replace(
            "form = \"atan_scaled\"\na = 0.5",
            "form = \"affine\"\na = 1.0\nb = 0.0",
        ),
    );
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\n[invariant]\nt_end = 1.0\neps0 = 0.5\nc0 = 2.0\npaths = 10\n",
    );
    let out = spdelab(&["invariant", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["growth"]["holds"], false);
    assert!(v["moments"].is_null());
}

#[test]
fn dump_trajectories_writes_coefficients_and_field() {
    let w = Workdir::new();
    w.write("model.toml", RD_MODEL);
    let cfg = w.write(
        "exp.toml",
        "model = \"model.toml\"\n[trajectories]\npaths = 2\nt_end = 0.01\nevery = 5\nx0 = [1.0]\nfield_points = 11\nfield_out = \"field.csv\"\n",
    );
    let out_path = w.path().join("traj.csv");
    let out = spdelab(&["dump-trajectories", arg(&cfg), "--out", arg(&out_path)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("path_id,step,t,coeff_0,"));
    assert!(header.ends_with("coeff_7"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,0,0,1,0,"), "{first}");
    // Steps 0, 5, 10 on each of two paths.
    assert_eq!(text.lines().count(), 1 + 2 * 3);

    let field = std::fs::read_to_string(w.path().join("field.csv")).unwrap();
    let mut lines = field.lines();
    assert_eq!(lines.next().unwrap(), "xi,u(xi)");
    assert_eq!(field.lines().count(), 12);
}

#[test]
fn seed_override_changes_monte_carlo_output() {
    let w = Workdir::new();
    let cfg = w.write(
        "exp.toml",
        "preset = \"ou\"\npaths = 100\n[check]\nt = [0.05]\ndirections = [\"e1\"]\n",
    );
    let a = spdelab(&["check", "gradient", arg(&cfg), "--seed", "1"]);
    let b = spdelab(&["check", "gradient", arg(&cfg), "--seed", "2"]);
    let c = spdelab(&["check", "gradient", arg(&cfg), "--seed", "1"]);
    assert_eq!(a.stdout, c.stdout);
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)[0]["seed"], 1);
}

#[test]
fn bundled_experiment_files_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    for name in ["rd.toml", "ou.toml"] {
        let (cfg, model) = spdelab_cli::ExperimentConfig::load(&root.join(name)).unwrap();
        assert!(cfg.converge.is_some());
        assert!(model.n >= 8);
    }
}
