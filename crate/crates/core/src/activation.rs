//! Squashing functions `Ψ: ℝ → [0, 1]` and a numerical check of the
//! squashing axioms (non-decreasing, limits 0 and 1, continuity).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear table. Knot positions are non-decreasing; a repeated
/// position encodes a jump, and the table is right-continuous there. Values
/// are held constant outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Tabulated {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for Tabulated {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Tabulated::new(knots)
    }
}

impl From<Tabulated> for Vec<(f64, f64)> {
    fn from(t: Tabulated) -> Self {
        t.knots
    }
}

impl Tabulated {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid(
                "a tabulated activation needs at least two knots",
            ));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("activation knots"));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::invalid("knot positions must be non-decreasing"));
        }
        Ok(Tabulated { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn value(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|(x, _)| *x <= t);
        if k == 0 {
            return self.knots[0].1;
        }
        if k == self.knots.len() {
            return self.knots[k - 1].1;
        }
        let (x0, y0) = self.knots[k - 1];
        let (x1, y1) = self.knots[k];
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }

    /// Largest secant slope between consecutive distinct knots.
    fn lipschitz(&self) -> f64 {
        self.knots
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SquashingFn {
    /// `1 / (1 + exp(-slope·t))`.
    Logistic {
        slope: f64,
    },
    /// 0 below 0, identity on `[0, 1]`, 1 above 1.
    Ramp,
    /// `1/2 + atan(slope·t) / π`.
    Arctan {
        slope: f64,
    },
    Tabulated(Tabulated),
}

impl Default for SquashingFn {
    fn default() -> Self {
        SquashingFn::Logistic { slope: 1.0 }
    }
}

impl SquashingFn {
    pub fn logistic() -> Self {
        Self::default()
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Tabulated::new(knots).map(SquashingFn::Tabulated)
    }

    pub fn validate_params(&self) -> Result<()> {
        match self {
            SquashingFn::Logistic { slope } | SquashingFn::Arctan { slope }
                if !(slope.is_finite() && *slope > 0.0) =>
            {
                Err(Error::invalid(
                    "activation slope must be positive and finite",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::NonFinite("activation argument"));
        }
        Ok(self.apply(t))
    }

    #[inline]
    pub(crate) fn apply(&self, t: f64) -> f64 {
        match self {
            SquashingFn::Logistic { slope } => 1.0 / (1.0 + (-slope * t).exp()),
            SquashingFn::Ramp => t.clamp(0.0, 1.0),
            SquashingFn::Arctan { slope } => 0.5 + (slope * t).atan() / PI,
            SquashingFn::Tabulated(tab) => tab.value(t),
        }
    }

    /// Lipschitz constant used as the default local slope bound.
    pub fn slope_bound(&self) -> f64 {
        match self {
            SquashingFn::Logistic { slope } => slope / 4.0,
            SquashingFn::Ramp => 1.0,
            SquashingFn::Arctan { slope } => slope / PI,
            SquashingFn::Tabulated(tab) => tab.lipschitz(),
        }
    }
}

/// Scan grid and thresholds for [`validate_squashing`].
///
/// The jump tolerance is `jump_factor · spacing · slope_bound`, with
/// `slope_bound` defaulting to [`SquashingFn::slope_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub lower_limit: f64,
    pub upper_limit: f64,
    pub monotone_tol: f64,
    pub range_tol: f64,
    pub jump_factor: f64,
    pub slope_bound: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            lo: -50.0,
            hi: 50.0,
            points: 10_000,
            lower_limit: 0.01,
            upper_limit: 0.99,
            monotone_tol: 1e-12,
            range_tol: 1e-9,
            jump_factor: 10.0,
            slope_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub monotone: bool,
    /// Tail thresholds met and every scanned value within `[0, 1]` up to `range_tol`.
    pub limits_ok: bool,
    pub continuous_ok: bool,
    pub max_jump: f64,
    pub jump_tolerance: f64,
    pub value_at_lo: f64,
    pub value_at_hi: f64,
    pub min_value: f64,
    pub max_value: f64,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.monotone && self.limits_ok && self.continuous_ok
    }
}

pub fn validate_squashing(psi: &SquashingFn, scan: &ScanConfig) -> Result<ValidationReport> {
    if scan.points < 2 {
        return Err(Error::invalid("scan grid needs at least two points"));
    }
    if !(scan.lo.is_finite() && scan.hi.is_finite() && scan.lo < scan.hi) {
        return Err(Error::invalid("scan range must be finite with lo < hi"));
    }
    let spacing = (scan.hi - scan.lo) / (scan.points - 1) as f64;
    let values: Vec<f64> = (0..scan.points)
        .map(|i| {
            let t = if i == scan.points - 1 {
                scan.hi
            } else {
                scan.lo + i as f64 * spacing
            };
            psi.apply(t)
        })
        .collect();

    let monotone = values.windows(2).all(|w| w[0] <= w[1] + scan.monotone_tol);
    let max_jump = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let slope = scan.slope_bound.unwrap_or_else(|| psi.slope_bound());
    let jump_tolerance = scan.jump_factor * spacing * slope;
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value_at_lo = values[0];
    let value_at_hi = values[scan.points - 1];
    let in_range = min_value >= -scan.range_tol && max_value <= 1.0 + scan.range_tol;

    Ok(ValidationReport {
        monotone,
        limits_ok: in_range && value_at_lo <= scan.lower_limit && value_at_hi >= scan.upper_limit,
        continuous_ok: max_jump <= jump_tolerance,
        max_jump,
        jump_tolerance,
        value_at_lo,
        value_at_hi,
        min_value,
        max_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> SquashingFn {
        SquashingFn::tabulated(vec![(-50.0, -50.0), (50.0, 50.0)]).unwrap()
    }

    fn hard_step() -> SquashingFn {
        SquashingFn::tabulated(vec![(-50.0, 0.0), (0.0, 0.0), (0.0, 1.0), (50.0, 1.0)]).unwrap()
    }

    #[test]
    fn logistic_values() {
        let psi = SquashingFn::logistic();
        assert_eq!(psi.eval(0.0).unwrap(), 0.5);
        let oracle = 1.0 / (1.0 + (-5.0f64).exp());
        assert!((psi.eval(5.0).unwrap() - 0.993_307_1).abs() < 1e-6);
        assert_eq!(psi.eval(5.0).unwrap(), oracle);
        assert!(psi.eval(f64::NAN).is_err());
        assert!(psi.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn logistic_symmetry() {
        let psi = SquashingFn::logistic();
        for i in -400..=400 {
            let t = i as f64 * 0.1;
            assert!((psi.apply(t) + psi.apply(-t) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn ramp_and_tables() {
        assert_eq!(SquashingFn::Ramp.eval(0.5).unwrap(), 0.5);
        assert_eq!(SquashingFn::Ramp.eval(-3.0).unwrap(), 0.0);
        assert_eq!(SquashingFn::Ramp.eval(3.0).unwrap(), 1.0);
        let step = hard_step();
        assert_eq!(step.apply(-1e-9), 0.0);
        assert_eq!(step.apply(0.0), 1.0);
        assert_eq!(step.apply(80.0), 1.0);
        assert_eq!(identity().apply(3.25), 3.25);
        assert!(SquashingFn::tabulated(vec![(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(SquashingFn::tabulated(vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn shipped_activations_pass() {
        let scan = ScanConfig::default();
        for psi in [
            SquashingFn::logistic(),
            SquashingFn::Logistic { slope: 3.0 },
            SquashingFn::Ramp,
            SquashingFn::Arctan { slope: 1.0 },
        ] {
            let r = validate_squashing(&psi, &scan).unwrap();
            assert!(r.all_ok(), "{psi:?}: {r:?}");
        }
    }

    #[test]
    fn fixtures_fail_documented_flags() {
        let scan = ScanConfig::default();
        let r = validate_squashing(&identity(), &scan).unwrap();
        assert!(r.monotone && r.continuous_ok && !r.limits_ok);
        let r = validate_squashing(&hard_step(), &scan).unwrap();
        assert!(r.monotone && r.limits_ok && !r.continuous_ok);
        assert_eq!(r.max_jump, 1.0);
        let decreasing = SquashingFn::tabulated(vec![(-50.0, 1.0), (50.0, 0.0)]).unwrap();
        assert!(!validate_squashing(&decreasing, &scan).unwrap().monotone);
    }

    #[test]
    fn scan_needs_two_points() {
        let scan = ScanConfig {
            points: 1,
            ..ScanConfig::default()
        };
        assert!(validate_squashing(&SquashingFn::Ramp, &scan).is_err());
    }

    #[test]
    fn json_forms() {
        let psi: SquashingFn = serde_json::from_str(r#"{"logistic": {"slope": 2.0}}"#).unwrap();
        assert_eq!(psi, SquashingFn::Logistic { slope: 2.0 });
        let psi: SquashingFn = serde_json::from_str(r#""ramp""#).unwrap();
        assert_eq!(psi, SquashingFn::Ramp);
        let psi: SquashingFn = serde_json::from_str(r#"{"tabulated": [[-1, 0], [1, 1]]}"#).unwrap();
        assert_eq!(psi.apply(0.0), 0.5);
        assert!(
            serde_json::from_str::<SquashingFn>(r#"{"tabulated": [[1, 0], [-1, 1]]}"#).is_err()
        );
    }
}
