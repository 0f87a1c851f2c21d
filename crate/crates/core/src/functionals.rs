//! Smooth cylindrical test functionals on the Galerkin space with exact
//! gradients and declared bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::GalerkinState;

/// `f(u)` built from one coordinate `⟨u, e_mode⟩` (`mode` is 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctional {
    /// `f ≡ value`.
    Constant { value: f64 },
    /// `⟨u, e_mode⟩`.
    Linear { mode: usize },
    /// `sin⟨u, e_mode⟩`.
    Sin { mode: usize },
    /// `shift + sin⟨u, e_mode⟩`.
    ShiftedSin { shift: f64, mode: usize },
}

/// Declared analytic properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalProperties {
    pub bounded: bool,
    /// Positive lower bound of `f`, when one exists.
    pub positive_floor: Option<f64>,
    /// `sup |∇f|`.
    pub grad_bound: f64,
}

impl FunctionalProperties {
    pub fn strictly_positive(&self) -> bool {
        self.positive_floor.is_some()
    }
}

impl TestFunctional {
    fn mode(&self) -> Option<usize> {
        match *self {
            TestFunctional::Constant { .. } => None,
            TestFunctional::Linear { mode }
            | TestFunctional::Sin { mode }
            | TestFunctional::ShiftedSin { mode, .. } => Some(mode),
        }
    }

    /// Rejects modes outside `1..=n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.mode() {
            Some(m) if m == 0 || m > n => Err(Error::Config(format!(
                "functional {} uses mode {m}, outside 1..={n}",
                self.id()
            ))),
            _ => Ok(()),
        }
    }

    pub fn id(&self) -> String {
        match *self {
            TestFunctional::Constant { value } => format!("constant:{value}"),
            TestFunctional::Linear { mode } => format!("linear:{mode}"),
            TestFunctional::Sin { mode } => format!("sin:{mode}"),
            TestFunctional::ShiftedSin { shift, mode } => format!("shifted_sin:{shift}:{mode}"),
        }
    }

    /// Inverse of [`TestFunctional::id`].
    pub fn parse(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number `{s}` in functional `{id}`")))
        };
        let idx = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad mode `{s}` in functional `{id}`")))
        };
        match parts.as_slice() {
            ["constant", v] => Ok(TestFunctional::Constant { value: num(v)? }),
            ["linear", m] => Ok(TestFunctional::Linear { mode: idx(m)? }),
            ["sin", m] => Ok(TestFunctional::Sin { mode: idx(m)? }),
            ["shifted_sin", s, m] => Ok(TestFunctional::ShiftedSin {
                shift: num(s)?,
                mode: idx(m)?,
            }),
            _ => Err(Error::Config(format!("unknown functional `{id}`"))),
        }
    }

    fn coord(&self, x: &[f64]) -> f64 {
        self.mode().map_or(0.0, |m| x[m - 1])
    }

    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        let u = self.coord(x);
        match *self {
            TestFunctional::Constant { value } => value,
            TestFunctional::Linear { .. } => u,
            TestFunctional::Sin { .. } => u.sin(),
            TestFunctional::ShiftedSin { shift, .. } => shift + u.sin(),
        }
    }

    pub fn eval(&self, x: &GalerkinState) -> f64 {
        self.eval_slice(x.coeffs())
    }

    /// Derivative along the functional's single coordinate.
    fn coord_derivative(&self, x: &[f64]) -> f64 {
        let u = self.coord(x);
        match self {
            TestFunctional::Constant { .. } => 0.0,
            TestFunctional::Linear { .. } => 1.0,
            TestFunctional::Sin { .. } | TestFunctional::ShiftedSin { .. } => u.cos(),
        }
    }

    pub fn grad(&self, x: &GalerkinState) -> GalerkinState {
        let mut g = GalerkinState::zeros(x.n());
        if let Some(m) = self.mode() {
            g.coeffs_mut()[m - 1] = self.coord_derivative(x.coeffs());
        }
        g
    }

    /// `|∇f(x)|²`.
    pub fn grad_norm_sq_slice(&self, x: &[f64]) -> f64 {
        self.coord_derivative(x).powi(2)
    }

    /// `⟨∇f(x), h⟩`.
    pub fn directional_slice(&self, x: &[f64], h: &[f64]) -> f64 {
        match self.mode() {
            Some(m) => self.coord_derivative(x) * h[m - 1],
            None => 0.0,
        }
    }

    pub fn properties(&self) -> FunctionalProperties {
        match *self {
            TestFunctional::Constant { value } => FunctionalProperties {
                bounded: true,
                positive_floor: (value > 0.0).then_some(value),
                grad_bound: 0.0,
            },
            TestFunctional::Linear { .. } => FunctionalProperties {
                bounded: false,
                positive_floor: None,
                grad_bound: 1.0,
            },
            TestFunctional::Sin { .. } => FunctionalProperties {
                bounded: true,
                positive_floor: None,
                grad_bound: 1.0,
            },
            TestFunctional::ShiftedSin { shift, .. } => FunctionalProperties {
                bounded: true,
                positive_floor: (shift > 1.0).then_some(shift - 1.0),
                grad_bound: 1.0,
            },
        }
    }

    /// `sup |f|`, when bounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match *self {
            TestFunctional::Constant { value } => Some(value.abs()),
            TestFunctional::Linear { .. } => None,
            TestFunctional::Sin { .. } => Some(1.0),
            TestFunctional::ShiftedSin { shift, .. } => Some(shift.abs() + 1.0),
        }
    }
}

impl std::fmt::Display for TestFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseStream;
    use crate::spectral::{EigenSpectrum, RectDomain};
    use proptest::prelude::*;

    fn all() -> Vec<TestFunctional> {
        vec![
            TestFunctional::Constant { value: 2.0 },
            TestFunctional::Linear { mode: 1 },
            TestFunctional::Sin { mode: 3 },
            TestFunctional::ShiftedSin {
                shift: 2.0,
                mode: 1,
            },
        ]
    }

    #[test]
    fn ids_round_trip() {
        for f in all() {
            assert_eq!(TestFunctional::parse(&f.id()).unwrap(), f);
        }
        assert!(TestFunctional::parse("cos:1").is_err());
        assert!(TestFunctional::Sin { mode: 5 }.validate(4).is_err());
        assert!(TestFunctional::Sin { mode: 0 }.validate(4).is_err());
    }

    #[test]
    fn declared_bounds_hold_on_gaussian_states() {
        let n = 8;
        let spec = EigenSpectrum::rectangle(RectDomain::unit_interval(), 1.0, n).unwrap();
        let noise = NoiseStream::new(99);
        let mut z = vec![0.0; n];
        for path in 0..100_000u64 {
            noise.path(path).fill_standard(0, &mut z);
            let x: Vec<f64> = z
                .iter()
                .zip(spec.lambdas())
                .map(|(z, l)| z / l.sqrt())
                .collect();
            for f in all() {
                let p = f.properties();
                let v = f.eval_slice(&x);
                assert!(v.is_finite());
                if let Some(s) = f.sup_abs() {
                    assert!(v.abs() <= s);
                }
                if let Some(floor) = p.positive_floor {
                    assert!(v >= floor && floor > 0.0);
                }
                assert!(f.grad_norm_sq_slice(&x).sqrt() <= p.grad_bound);
            }
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            x in prop::collection::vec(-3.0f64..3.0, 4),
            h in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let eps = 1e-6;
            for f in all() {
                let xp: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + eps * b).collect();
                let xm: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - eps * b).collect();
                let fd = (f.eval_slice(&xp) - f.eval_slice(&xm)) / (2.0 * eps);
                let g = f.grad(&GalerkinState::new(x.clone()));
                let exact: f64 = g.coeffs().iter().zip(&h).map(|(a, b)| a * b).sum();
                prop_assert!((fd - exact).abs() < 1e-7);
                prop_assert!((f.directional_slice(&x, &h) - exact).abs() < 1e-15);
            }
        }
    }
}
