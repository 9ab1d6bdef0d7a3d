use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Family, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSource {
    ClosedForm,
    Quadrature,
}

/// Actions of the connection families. For `W1` only `e0` and `e_pm` are
/// set; for `W2` `e0`, `e_i` and `e_ii`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionFormulas {
    pub source: ActionSource,
    pub e0: f64,
    pub e_pm: Option<f64>,
    pub e_i: Option<f64>,
    pub e_ii: Option<f64>,
}

/// `sqrt((sqrt 6 - 1) / 2) - (sqrt 6 - 1) / 2`, the printed threshold for
/// `eps1`.
pub fn eps1_star() -> f64 {
    let q = (6f64.sqrt() - 1.0) / 2.0;
    q.sqrt() - q
}

/// The printed closed-form actions, transcribed literally. These are reported
/// next to quadrature values and never used as solver input.
pub fn closed_form_actions(spec: &PotentialSpec) -> Result<ActionFormulas> {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let pi = std::f64::consts::PI;
    match spec.family {
        Family::W1 { eps } => {
            let k = (1.0 + eps * eps) / eps;
            Ok(ActionFormulas {
                source: ActionSource::ClosedForm,
                e0: r2 * (k * (pi - eps.atan()) - eps),
                e_pm: Some(r2 * (2.0 + 2.0 * k * eps.atan())),
                e_i: None,
                e_ii: None,
            })
        }
        Family::W2 { eps1, eps2 } => {
            let gap = eps2 * eps2 - eps1 * eps1;
            if gap.abs() <= 1e-12 * eps2 * eps2 {
                return Err(Error::SingularParameters("eps2 -> eps1".into()));
            }
            let a = (eps1 * eps1 + 1.0).powi(2) / (eps1 * gap);
            let b = (eps2 * eps2 + 1.0).powi(2) / (eps2 * gap);
            let (t1, t2) = (eps1.atan(), eps2.atan());
            let e0 = r2 * (2.0 - a * t1 + b * t2 - b * pi / 2.0 + a * pi / 2.0).abs();
            let e_i = r2 * (2.0 - b * t2 + a * t1 + b * pi / 2.0).abs();
            let e_ii = r2 * (2.0 + b * t2 - a * t1).abs();
            Ok(ActionFormulas {
                source: ActionSource::ClosedForm,
                e0,
                e_pm: None,
                e_i: Some(e_i),
                e_ii: Some(e_ii),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w1_eps1_printed_e0() {
        let f = closed_form_actions(&PotentialSpec::w1(1.0).unwrap()).unwrap();
        let pi = std::f64::consts::PI;
        let oracle = (2.0 * (pi - pi / 4.0) - 1.0) / 2f64.sqrt();
        assert!((f.e0 - oracle).abs() < 1e-12);
        assert!((f.e0 - 2.6251).abs() < 1e-4);
    }

    #[test]
    fn w1_small_eps_limit_of_printed_e_pm() {
        // (1 + eps^2) arctan(eps) / eps -> 1, so the printed value tends to
        // 4 / sqrt(2).
        let f = closed_form_actions(&PotentialSpec::w1(1e-6).unwrap()).unwrap();
        assert!((f.e_pm.unwrap() - 4.0 / 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn w2_singular_limit() {
        let err = closed_form_actions(&PotentialSpec::w2(0.5, 0.5).unwrap()).unwrap_err();
        assert!(err.to_string().contains("eps2 -> eps1"));
    }

    #[test]
    fn eps1_star_value() {
        let v = eps1_star();
        assert!((v - 0.126_574_6).abs() < 1e-6);
    }
}
