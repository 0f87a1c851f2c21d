//! One-dimensional quadrature and tail bounds for power/exponential series.

use statrs::function::gamma::gamma_ui;

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `tol` is an absolute error target for the whole interval. Fails when the
/// recursion depth is exhausted before every panel meets its share of `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, max_depth)?;
    if !value.is_finite() {
        return Err(Error::Numerical(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}]"
        )));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// `∫_m^∞ c x^q e^{−a x^p} dx` in closed form through the upper incomplete gamma
/// function.
pub fn power_exp_tail(c: f64, q: f64, p: f64, a: f64, m: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let s = (q + 1.0) / p;
    let z = a * m.powf(p);
    // Γ(s, z) underflows long before the prefactor overflows.
    if z > 700.0 {
        let log_tail = (c / p).ln() - s * a.ln() + log_upper_gamma_asymptotic(s, z);
        return log_tail.exp();
    }
    c / p * a.powf(-s) * gamma_ui(s, z)
}

/// `ln Γ(s, z)` for large `z` from the leading asymptotic term
/// `z^{s−1} e^{−z} (1 + (s−1)/z + …)`, bounded above by doubling it.
fn log_upper_gamma_asymptotic(s: f64, z: f64) -> f64 {
    (s - 1.0) * z.ln() - z + (2.0f64).ln()
}

/// `∫_m^∞ c x^{−s} dx` for `s > 1`.
pub fn power_tail(c: f64, s: f64, m: f64) -> f64 {
    debug_assert!(s > 1.0);
    c * m.powf(1.0 - s) / (s - 1.0)
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (a + k)^{−s}` for `s > 1`, `a > 0`, by
/// Euler–Maclaurin summation after ten explicit terms.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    // B_{2j} / (2j)!
    const B2J_OVER_FACT: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    const N: usize = 10;
    let mut sum: f64 = (0..N).map(|k| (a + k as f64).powf(-s)).sum();
    let x = a + N as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Rising factorial s (s+1) ... (s+2j−2) times x^{−s−2j+1}.
    let mut rising = s;
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in B2J_OVER_FACT.iter().enumerate() {
        let term = b * rising * xp;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        xp /= x * x;
    }
    sum
}
