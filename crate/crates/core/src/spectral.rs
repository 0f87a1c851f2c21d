//! Dirichlet eigenstructure of the fractional Laplacian on rectangles and the
//! diagonal semigroup it generates on Galerkin coefficients.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when testing whether a point lies in the closed rectangle.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Axis-aligned rectangle `∏ [a_i, b_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    sides: Vec<(f64, f64)>,
}

impl RectDomain {
    pub fn new(sides: Vec<(f64, f64)>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::Domain("rectangle needs at least one side".into()));
        }
        for (i, &(a, b)) in sides.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::Domain(format!(
                    "side {i} has non-positive length: [{a}, {b}]"
                )));
            }
        }
        Ok(Self { sides })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit_interval() -> Self {
        Self {
            sides: vec![(0.0, 1.0)],
        }
    }

    /// The unit cube `[0, 1]^d`.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); d])
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[(f64, f64)] {
        &self.sides
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (a, b) = self.sides[axis];
        b - a
    }

    pub fn max_length(&self) -> f64 {
        (0..self.dim()).map(|i| self.length(i)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.length(i)).product()
    }

    /// `sup_ξ |e_m(ξ)|²`, identical for every mode: `∏ 2 / (b_i − a_i)`.
    pub fn eigenfunction_sup_sq(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 / self.length(i)).product()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim()
            && self.sides.iter().zip(xi).all(|(&(a, b), &x)| {
                let slack = BOUNDARY_SLACK * (b - a);
                x >= a - slack && x <= b + slack
            })
    }

    /// Dirichlet Laplacian eigenvalue `Σ (m_i π / L_i)²` without the fractional
    /// power. Terms are summed in sorted order so that permuted multi-indices on
    /// a cube produce bit-identical values.
    fn laplacian_eigenvalue(&self, m: &[usize]) -> f64 {
        let mut terms: Vec<f64> = m
            .iter()
            .enumerate()
            .map(|(i, &mi)| {
                let k = mi as f64 * PI / self.length(i);
                k * k
            })
            .collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }

    fn check_multi_index(&self, m: &[usize]) -> Result<()> {
        if m.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: m.len(),
            });
        }
        if m.iter().any(|&mi| mi < 1) {
            return Err(Error::Domain(format!(
                "multi-index entries must be >= 1, got {m:?}"
            )));
        }
        Ok(())
    }
}

/// Eigenvalue `(Σ (m_i π / (b_i − a_i))²)^α` of `(−Δ)^α` with Dirichlet boundary.
pub fn eigenvalue(domain: &RectDomain, alpha: f64, m: &[usize]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    domain.check_multi_index(m)?;
    Ok(domain.laplacian_eigenvalue(m).powf(alpha))
}

/// L²-normalised Dirichlet eigenfunction
/// `∏ sqrt(2/L_i) sin(m_i π (ξ_i − a_i)/L_i)` evaluated at `xi`.
pub fn eigenfunction_eval(domain: &RectDomain, m: &[usize], xi: &[f64]) -> Result<f64> {
    domain.check_multi_index(m)?;
    if !domain.contains(xi) {
        return Err(Error::Domain(format!(
            "point {xi:?} lies outside the domain"
        )));
    }
    Ok(domain
        .sides()
        .iter()
        .zip(m)
        .zip(xi)
        .map(|((&(a, b), &mi), &x)| {
            let len = b - a;
            (2.0 / len).sqrt() * (mi as f64 * PI * (x - a) / len).sin()
        })
        .product())
}

/// `e^{−λt}`, the action of the semigroup on one eigen-direction.
pub fn semigroup_factor(t: f64, lambda: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if lambda < 0.0 {
        return Err(Error::Domain(format!(
            "eigenvalue must be non-negative, got {lambda}"
        )));
    }
    Ok((-lambda * t).exp())
}

/// Truncated spectrum: the first `n` modes under the canonical ordering
/// (eigenvalue ascending, ties broken lexicographically on the multi-index).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    domain: Option<RectDomain>,
    alpha: f64,
    modes: Vec<Vec<usize>>,
    lambdas: Vec<f64>,
}

impl EigenSpectrum {
    /// Synthesises the first `n` Dirichlet modes of the rectangle.
    pub fn rectangle(domain: RectDomain, alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if n == 0 {
            return Err(Error::Domain("need at least one mode".into()));
        }
        let d = domain.dim();
        let modes = if d == 1 {
            (1..=n).map(|m| vec![m]).collect()
        } else {
            lowest_multi_indices(&domain, n)
        };
        let lambdas = modes
            .iter()
            .map(|m| domain.laplacian_eigenvalue(m).powf(alpha))
            .collect();
        Ok(Self {
            domain: Some(domain),
            alpha,
            modes,
            lambdas,
        })
    }

    /// Abstract diagonal spectrum given directly by its eigenvalues.
    pub fn from_eigenvalues(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Domain("need at least one mode".into()));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Domain("eigenvalues must be finite and >= 0".into()));
        }
        if lambdas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("eigenvalues must be non-decreasing".into()));
        }
        let modes = (1..=lambdas.len()).map(|m| vec![m]).collect();
        Ok(Self {
            domain: None,
            alpha: 1.0,
            modes,
            lambdas,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn domain(&self) -> Option<&RectDomain> {
        self.domain.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(0.0)
    }

    /// Applies `T_t` to a coefficient vector.
    pub fn apply_semigroup(&self, t: f64, state: &GalerkinState) -> Result<GalerkinState> {
        self.check_state(state)?;
        let coeffs = state
            .coeffs()
            .iter()
            .zip(&self.lambdas)
            .map(|(c, &l)| semigroup_factor(t, l).map(|f| f * c))
            .collect::<Result<Vec<_>>>()?;
        Ok(GalerkinState::new(coeffs))
    }

    pub fn check_state(&self, state: &GalerkinState) -> Result<()> {
        if state.n() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: state.n(),
            });
        }
        Ok(())
    }

    /// Evaluates the field `Σ c_k e_k(ξ)` at a point of the rectangle.
    pub fn synthesize_at(&self, state: &GalerkinState, xi: &[f64]) -> Result<f64> {
        let domain = self
            .domain
            .as_ref()
            .ok_or_else(|| Error::Domain("abstract spectrum has no eigenfunctions".into()))?;
        self.check_state(state)?;
        let mut acc = 0.0;
        for (m, c) in self.modes.iter().zip(state.coeffs()) {
            acc += c * eigenfunction_eval(domain, m, xi)?;
        }
        Ok(acc)
    }
}

fn lowest_multi_indices(domain: &RectDomain, n: usize) -> Vec<Vec<usize>> {
    let d = domain.dim();
    // The modes k·e_axis, k = 1..n, are n candidates, so the n lowest all sit
    // below the cheapest such ray end-point.
    let threshold = (0..d)
        .map(|axis| {
            let mut m = vec![1; d];
            m[axis] = n;
            domain.laplacian_eigenvalue(&m)
        })
        .fold(f64::INFINITY, f64::min)
        * (1.0 + 1e-12);

    let mut found = Vec::new();
    let mut current = vec![1usize; d];
    collect_below(domain, threshold, 0, 0.0, &mut current, &mut found);

    let mut keyed: Vec<(f64, Vec<usize>)> = found
        .into_iter()
        .map(|m| (domain.laplacian_eigenvalue(&m), m))
        .collect();
    keyed.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        other => other,
    });
    keyed.truncate(n);
    keyed.into_iter().map(|(_, m)| m).collect()
}

fn collect_below(
    domain: &RectDomain,
    threshold: f64,
    axis: usize,
    partial: f64,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let d = domain.dim();
    // Remaining axes contribute at least their m = 1 term.
    let rest_min: f64 = (axis + 1..d).map(|i| (PI / domain.length(i)).powi(2)).sum();
    let mut m = 1;
    loop {
        let term = (m as f64 * PI / domain.length(axis)).powi(2);
        if partial + term + rest_min > threshold {
            break;
        }
        current[axis] = m;
        if axis + 1 == d {
            out.push(current.clone());
        } else {
            collect_below(domain, threshold, axis + 1, partial + term, current, out);
        }
        m += 1;
    }
    current[axis] = 1;
}

/// Coefficients `⟨x, e_k⟩` of a snapshot in `span{e_1, …, e_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinState {
    coeffs: Vec<f64>,
}

impl GalerkinState {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: vec![0.0; n],
        }
    }

    /// Unit vector along mode `k` (0-based).
    pub fn unit(n: usize, k: usize) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `|x|²`, equal to the L² norm of the field by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Orthogonal projection `P_n` onto the first `n` modes.
    pub fn project(&self, n: usize) -> Result<Self> {
        if n > self.n() {
            return Err(Error::Domain(format!(
                "cannot project a {}-mode state onto {n} modes",
                self.n()
            )));
        }
        Ok(Self {
            coeffs: self.coeffs[..n].to_vec(),
        })
    }

    /// Embeds into `H_N` by zero padding.
    pub fn zero_pad(&self, n_big: usize) -> Result<Self> {
        if n_big < self.n() {
            return Err(Error::Domain(format!(
                "cannot embed {} modes into {n_big}",
                self.n()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_big, 0.0);
        Ok(Self { coeffs })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        if other.n() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    pub fn distance_sq(&self, other: &Self) -> Result<f64> {
        if other.n() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| (x - y) * (x - y))
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn first_dirichlet_eigenvalue() {
        let d = RectDomain::unit_interval();
        assert_relative_eq!(
            eigenvalue(&d, 1.0, &[1]).unwrap(),
            PI * PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn fractional_power_applies_to_full_eigenvalue() {
        let d = RectDomain::unit_interval();
        let l = eigenvalue(&d, 2.0, &[2]).unwrap();
        assert_relative_eq!(l, 16.0 * PI.powi(4), max_relative = 1e-14);
        assert_relative_eq!(l, 1558.5454565440395, max_relative = 1e-12);
    }

    #[test]
    fn square_ground_state() {
        let d = RectDomain::unit_cube(2).unwrap();
        assert_relative_eq!(
            eigenvalue(&d, 1.0, &[1, 1]).unwrap(),
            2.0 * PI * PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn eigenvalue_rejects_bad_input() {
        let d = RectDomain::unit_interval();
        assert!(matches!(eigenvalue(&d, 1.0, &[0]), Err(Error::Domain(_))));
        assert!(eigenvalue(&d, 0.0, &[1]).is_err());
        assert!(RectDomain::new(vec![(1.0, 1.0)]).is_err());
        assert!(RectDomain::new(vec![(2.0, 1.0)]).is_err());
    }

    #[test]
    fn eigenfunction_values() {
        let d = RectDomain::unit_interval();
        assert_relative_eq!(eigenfunction_eval(&d, &[1], &[0.5]).unwrap(), 2f64.sqrt());
        assert!(eigenfunction_eval(&d, &[2], &[0.5]).unwrap().abs() < 1e-15);
        assert_eq!(eigenfunction_eval(&d, &[1], &[0.0]).unwrap(), 0.0);
        assert!(matches!(
            eigenfunction_eval(&d, &[1], &[1.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn eigenfunctions_are_normalised() {
        let d = RectDomain::new(vec![(-1.0, 2.0)]).unwrap();
        for m in 1..=7 {
            let grid = 64 * m;
            let h = 3.0 / grid as f64;
            let integral: f64 = (0..grid)
                .map(|j| {
                    let x = -1.0 + (j as f64 + 0.5) * h;
                    eigenfunction_eval(&d, &[m], &[x]).unwrap().powi(2) * h
                })
                .sum();
            assert!((integral - 1.0).abs() < 1e-6, "m={m}: {integral}");
        }
    }

    #[test]
    fn semigroup_factor_values() {
        assert_eq!(semigroup_factor(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(semigroup_factor(3.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            semigroup_factor(1.0, PI * PI).unwrap(),
            5.172_318_620_381_9e-5,
            max_relative = 1e-10
        );
        assert!(semigroup_factor(-1.0, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let s = GalerkinState::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.project(2).unwrap().coeffs(), &[1.0, 2.0]);
        assert_eq!(s.project(3).unwrap(), s);
        let s = GalerkinState::new(vec![3.0, 4.0]);
        let p = s.project(1).unwrap();
        assert_eq!(p.coeffs(), &[3.0]);
        assert!(p.norm() <= s.norm());
        assert!(s.project(3).is_err());
    }

    #[test]
    fn interval_spectrum_is_exact() {
        for &alpha in &[0.75, 1.0, 2.0] {
            let s = EigenSpectrum::rectangle(RectDomain::unit_interval(), alpha, 40).unwrap();
            for (k, &l) in s.lambdas().iter().enumerate() {
                let m = (k + 1) as f64;
                assert_relative_eq!(l, (m * PI).powf(2.0 * alpha), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn square_ordering_breaks_ties_lexicographically() {
        let s = EigenSpectrum::rectangle(RectDomain::unit_cube(2).unwrap(), 1.0, 6).unwrap();
        assert_eq!(
            s.modes(),
            &[
                vec![1, 1],
                vec![1, 2],
                vec![2, 1],
                vec![2, 2],
                vec![1, 3],
                vec![3, 1]
            ]
        );
        assert_eq!(s.lambdas()[1], s.lambdas()[2]);
        assert!(s.lambdas().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rectangle_spectrum_matches_brute_force() {
        let d = RectDomain::new(vec![(0.0, 1.0), (0.0, 2.5), (0.0, 0.7)]).unwrap();
        let n = 30;
        let s = EigenSpectrum::rectangle(d.clone(), 1.5, n).unwrap();
        let mut all = Vec::new();
        for a in 1..=n {
            for b in 1..=n {
                for c in 1..=n {
                    all.push(eigenvalue(&d, 1.5, &[a, b, c]).unwrap());
                }
            }
        }
        all.sort_by(f64::total_cmp);
        for (x, y) in s.lambdas().iter().zip(&all) {
            assert_relative_eq!(*x, *y, max_relative = 1e-13);
        }
    }

    #[test]
    fn abstract_spectrum_validation() {
        assert!(EigenSpectrum::from_eigenvalues(vec![0.0, 1.0, 4.0]).is_ok());
        assert!(EigenSpectrum::from_eigenvalues(vec![2.0, 1.0]).is_err());
        assert!(EigenSpectrum::from_eigenvalues(vec![-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn semigroup_property(s in 0.0..5.0f64, t in 0.0..5.0f64, lambda in 0.0..50.0f64) {
            let lhs = semigroup_factor(s + t, lambda).unwrap();
            let rhs = semigroup_factor(s, lambda).unwrap() * semigroup_factor(t, lambda).unwrap();
            if lhs > 1e-300 {
                prop_assert!(((lhs - rhs) / lhs).abs() <= 1e-14 * (1.0 + lambda * (s + t)));
            }
        }

        #[test]
        fn projection_is_idempotent_contraction(
            coeffs in proptest::collection::vec(-10.0..10.0f64, 1..20),
            frac in 0.0..1.0f64,
        ) {
            let s = GalerkinState::new(coeffs);
            let n = (frac * s.n() as f64) as usize;
            let p = s.project(n).unwrap();
            prop_assert_eq!(p.project(n).unwrap(), p.clone());
            prop_assert!(p.norm_sq() <= s.norm_sq());
        }

        #[test]
        fn parseval_on_the_interval(coeffs in proptest::collection::vec(-2.0..2.0f64, 1..6)) {
            let n = coeffs.len();
            let spec = EigenSpectrum::rectangle(RectDomain::unit_interval(), 1.0, n).unwrap();
            let state = GalerkinState::new(coeffs);
            // Midpoint rule is exact for trigonometric polynomials of low degree.
            let grid = 512;
            let h = 1.0 / grid as f64;
            let l2: f64 = (0..grid)
                .map(|j| spec.synthesize_at(&state, &[(j as f64 + 0.5) * h]).unwrap().powi(2) * h)
                .sum();
            prop_assert!((l2 - state.norm_sq()).abs() < 1e-10 * (1.0 + l2));
        }
    }
}
