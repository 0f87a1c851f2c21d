use spdelab_core::stats::SampleStats;
use spdelab_core::{
    Estimator, GalerkinState, McSettings, NoiseStream, ReactionDiffusionModel, Scheme,
    SchemeConfig, Simulator, TestFunctional,
};

fn reference_sim_parts() -> (
    ReactionDiffusionModel,
    spdelab_core::reaction_diffusion::GalerkinSystem,
) {
    let model = ReactionDiffusionModel::reference();
    let sys = model.system().unwrap();
    (model, sys)
}

#[test]
fn derivative_flow_is_linear_in_direction() {
    let (model, sys) = reference_sim_parts();
    let n = model.n;
    let cfg = SchemeConfig::new(Scheme::ExponentialEuler, 0.05, 1e-3).unwrap();
    let sim = Simulator::new(&sys.spectrum, &sys.coeffs, cfg, NoiseStream::new(4)).unwrap();
    let x0 = GalerkinState::new((0..n).map(|i| 0.3 / (i + 1) as f64).collect());
    let v = GalerkinState::new((0..n).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect());
    let w = GalerkinState::unit(n, 2);
    for path in 0..5 {
        let (xa, h) = sim.derivative_flow(&x0, &v, path).unwrap();
        let (xb, h2) = sim.derivative_flow(&x0, &v.scaled(2.0), path).unwrap();
        // Scaling by 2 is exact in binary floating point.
        assert_eq!(xa, xb);
        assert_eq!(h.scaled(2.0), h2);

        let (_, hs) = sim
            .derivative_flow_multi(&x0, &[v.clone(), w.clone(), v.axpy(1.0, &w).unwrap()], path)
            .unwrap();
        let sum = hs[0].axpy(1.0, &hs[1]).unwrap();
        let err = sum.distance_sq(&hs[2]).unwrap().sqrt();
        assert!(err <= 1e-13 * (1.0 + sum.norm()), "{err}");
    }
}

#[test]
fn finite_differences_converge_to_flow_at_first_order() {
    let (model, sys) = reference_sim_parts();
    let n = model.n;
    let mut settings = McSettings::new(200, 8);
    settings.threads = Some(2);
    let est = Estimator::new(&sys.spectrum, &sys.coeffs, settings).unwrap();
    let f = TestFunctional::Sin { mode: 1 };
    let x = GalerkinState::unit(n, 0).scaled(1.5);
    let v = GalerkinState::unit(n, 0);
    let t = 0.01;
    let flow = est.grad_via_flow(&f, &x, &v, t).unwrap().mean;
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&eps| (est.grad_via_fd(&f, &x, &v, eps, t).unwrap().mean - flow).abs())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.3).contains(&ratio), "errors {errs:?}");
    }
}

#[test]
fn coupled_pairs_contract_at_the_lipschitz_rate() {
    let (model, sys) = reference_sim_parts();
    let n = model.n;
    let t = 0.02;
    let cfg = SchemeConfig::new(Scheme::ExponentialEuler, t, 1e-3).unwrap();
    let sim = Simulator::new(&sys.spectrum, &sys.coeffs, cfg, NoiseStream::new(12)).unwrap();
    let x = GalerkinState::zeros(n);
    let y = GalerkinState::new((0..n).map(|i| 0.2 / (i + 1) as f64).collect());
    let d0 = x.distance_sq(&y).unwrap();
    let samples: Vec<f64> = (0..400)
        .map(|p| {
            let (xt, yt) = sim.coupled_pair(&x, &y, p).unwrap();
            xt.distance_sq(&yt).unwrap()
        })
        .collect();
    let s = SampleStats::from_slice(&samples);
    // −2λ₁ from the linear part, 2·Lip(ψ) from the drift, 2 n Lip(φ)² from
    // the projected noise (‖e_m‖²_∞ = 2).
    let lam1 = sys.spectrum.lambdas()[0];
    let rate = -2.0 * lam1 + 2.0 * 0.5 + 2.0 * n as f64 * 0.01;
    let bound = (rate * t).exp() * d0;
    assert!(s.mean - 4.0 * s.stderr() <= bound, "{} vs {bound}", s.mean);
    assert!(s.mean > 0.0);
}

#[test]
fn equal_starts_stay_equal() {
    let (model, sys) = reference_sim_parts();
    let cfg = SchemeConfig::new(Scheme::EulerMaruyama, 0.01, 1e-4).unwrap();
    let sim = Simulator::new(&sys.spectrum, &sys.coeffs, cfg, NoiseStream::new(1)).unwrap();
    let x = GalerkinState::unit(model.n, 3);
    let (a, b) = sim.coupled_pair(&x, &x, 9).unwrap();
    assert_eq!(a, b);
}
