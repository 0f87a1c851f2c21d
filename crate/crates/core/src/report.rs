//! Serializable result tables.

use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::regularity::{CriticalTime, RegularityProfile};

/// Serializes `+∞` as the string `"inf"`; finite values as numbers.
pub fn f64_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn opt_f64_or_inf<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => f64_or_inf(v, s),
        None => s.serialize_none(),
    }
}

/// All semigroup constants at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsRow {
    pub t: f64,
    pub gradient_constant: f64,
    /// `inf` at `t = 0`; `None` without a positive ellipticity bound.
    #[serde(serialize_with = "opt_f64_or_inf")]
    pub logharnack_constant: Option<f64>,
    /// `None` without an upper ellipticity bound.
    #[serde(serialize_with = "opt_f64_or_inf")]
    pub poincare_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub t0: CriticalTime,
    pub lambda_sigma: f64,
    pub lambda_bar_sigma: Option<f64>,
    pub rows: Vec<ConstantsRow>,
}

/// Constants over a time grid; `t = 0` flags the log-Harnack constant as
/// infinite.
pub fn constants_table(profile: &RegularityProfile, ts: &[f64]) -> Result<ConstantsTable> {
    let rows = ts
        .iter()
        .map(|&t| {
            let logharnack_constant = if profile.lambda_sigma <= 0.0 {
                None
            } else if t == 0.0 {
                Some(f64::INFINITY)
            } else {
                Some(profile.logharnack_constant(t)?)
            };
            let poincare_constant = match profile.lambda_bar_sigma {
                Some(_) => Some(profile.poincare_constant(t)?),
                None => None,
            };
            Ok(ConstantsRow {
                t,
                gradient_constant: profile.gradient_constant(t),
                logharnack_constant,
                poincare_constant,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConstantsTable {
        t0: profile.t0,
        lambda_sigma: profile.lambda_sigma,
        lambda_bar_sigma: profile.lambda_bar_sigma,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::KernelSpec;

    #[test]
    fn limit_convention_rows() {
        let p = RegularityProfile::new(
            KernelSpec::constant(0.0).unwrap(),
            KernelSpec::constant(0.0).unwrap(),
            1.0,
            Some(1.0),
        )
        .unwrap();
        let t = constants_table(&p, &[0.0, 2.0]).unwrap();
        assert_eq!(t.rows[0].gradient_constant, 6.0);
        assert_eq!(t.rows[0].logharnack_constant, Some(f64::INFINITY));
        assert_eq!(t.rows[0].poincare_constant, Some(0.0));
        assert!((t.rows[1].logharnack_constant.unwrap() - 1.5).abs() < 1e-14);
        assert!((t.rows[1].poincare_constant.unwrap() - 24.0).abs() < 1e-13);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"logharnack_constant\":\"inf\""));
        assert!(json.contains("\"t0\":\"inf\""));
    }
}
