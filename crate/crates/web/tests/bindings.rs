use spdelab_web::{constant_curves, field_path, ou_convergence};

#[test]
fn constant_curves_match_reference_model() {
    let c = constant_curves(0.5, 0.1, 2.0, 1.0, 20).unwrap();
    assert_eq!(c.t.len(), 20);
    let t0 = c.t0.unwrap();
    assert!((t0 - 0.66622).abs() < 1e-4, "{t0}");
    assert!(c.gradient.windows(2).all(|w| w[1] > w[0]));
    assert!(c.logharnack.iter().all(|v| v.is_some()));
    let json = serde_json::to_string(&c).unwrap();
    assert!(json.contains("\"gradient\""));
}

#[test]
fn field_path_starts_at_initial_mode() {
    let p = field_path(0.5, 0.1, 2.0, 8, 1.0, 0.01, 3, 1, 11).unwrap();
    assert_eq!(p.xi.len(), 11);
    assert_eq!(p.snapshots.len(), 3);
    assert_eq!(p.snapshots[0].t, 0.0);
    // u₀ = e₁ = √2 sin(πξ), peaking at the midpoint.
    let mid = p.snapshots[0].u[5];
    assert!((mid - 2f64.sqrt()).abs() < 1e-12, "{mid}");
    assert!((p.snapshots[2].t - 0.01).abs() < 1e-12);
}

#[test]
fn ou_convergence_tracks_tail_sum() {
    let rows = ou_convergence(16, 400, 0.1, 3).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.n).collect::<Vec<_>>(),
        vec![1, 2, 4, 8]
    );
    for r in &rows {
        assert!(
            (r.error - r.exact).abs() <= 4.0 * r.stderr + 1e-15,
            "n = {}",
            r.n
        );
    }
}
