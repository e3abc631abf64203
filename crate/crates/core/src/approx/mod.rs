//! Fitting networks to targets on compact sets and measuring the error.
//!
//! All "uniform" errors are maxima over a finite net of the compact set, not
//! over the set itself.

mod fit;
mod sweep;
mod target;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use fit::{
    default_bias_range, fit_dictionary, fit_greedy, fit_random_features, greedy_on_points,
    net_radius, sample_dictionary, Dictionary, Greedy, GreedyFit, RandomFeatures,
};
pub use sweep::{
    density_curve, CellRecord, DensityConfig, FitReport, Fitter, SampleSpec, WidthSummary,
};
pub use target::{Target, TargetExpr};

use crate::error::{Error, Result};
use crate::spaces::{SpaceKind, SpacePoint};
use crate::Evaluate;

/// Tolerance on the total mass of a [`RadonSample`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest `|model(x) − target(x)|` over `net`.
pub fn uniform_error(
    model: &impl Evaluate,
    target: &impl Evaluate,
    net: &[SpacePoint],
) -> Result<f64> {
    if net.is_empty() {
        return Err(Error::Empty("evaluation net"));
    }
    let mut worst = 0.0_f64;
    for x in net {
        let d = (model.evaluate(x)? - target.evaluate(x)?).abs();
        if d.is_nan() {
            return Err(Error::NonFinite("uniform error"));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Atomic probability measure on finitely many points of a compact set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadonSampleDesc", into = "RadonSampleDesc")]
pub struct RadonSample {
    points: Vec<SpacePoint>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadonSampleDesc {
    space: SpaceKind,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RadonSampleDesc> for RadonSample {
    type Error = Error;

    fn try_from(d: RadonSampleDesc) -> Result<Self> {
        let points = d
            .points
            .into_iter()
            .map(|c| SpacePoint::new(d.space, c))
            .collect::<Result<_>>()?;
        RadonSample::new(points, d.weights)
    }
}

impl From<RadonSample> for RadonSampleDesc {
    fn from(s: RadonSample) -> Self {
        RadonSampleDesc {
            space: s.points[0].kind(),
            points: s.points.iter().map(|p| p.coords().to_vec()).collect(),
            weights: s.weights,
        }
    }
}

impl RadonSample {
    pub fn new(points: Vec<SpacePoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("radon sample"));
        }
        if weights.len() != points.len() {
            return Err(Error::LengthMismatch {
                context: "radon sample weights",
                expected: points.len(),
                found: weights.len(),
            });
        }
        let kind = points[0].kind();
        for p in &points[1..] {
            kind.ensure_same(&p.kind())?;
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "radon sample weights must be finite and nonnegative",
            ));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!(
                "radon sample weights sum to {mass}, expected 1"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<SpacePoint>) -> Result<Self> {
        let n = points.len();
        let weights = vec![1.0 / n.max(1) as f64; n];
        Self::new(points, weights)
    }

    /// Weights proportional to i.i.d. uniform `(0, 1]` draws.
    pub fn random(points: Vec<SpacePoint>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..points.len()).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(points, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn points(&self) -> &[SpacePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "p must be a finite number >= 1, got {p}"
        )))
    }
}

fn lp_norm(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v.abs().powf(p))
        .sum();
    s.powf(1.0 / p)
}

/// `(Σ w_i |model(x_i) − target(x_i)|^p)^{1/p}` over the sample atoms.
pub fn lp_error(
    model: &impl Evaluate,
    target: &impl Evaluate,
    sample: &RadonSample,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    let mut dev = Vec::with_capacity(sample.len());
    for x in sample.points() {
        dev.push(model.evaluate(x)? - target.evaluate(x)?);
    }
    let v = lp_norm(&dev, sample.weights(), p);
    if v.is_nan() {
        return Err(Error::NonFinite("lp error"));
    }
    Ok(v)
}

/// Both sides of `‖u‖_p ≤ μ(K)^{1/p} ‖u‖_∞` on the atoms of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpBound {
    pub lp: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Relative slack allowed for rounding in [`LpBound::holds`].
pub const LP_BOUND_SLACK: f64 = 1e-12;

pub fn lp_uniform_inequality_check(
    u: &impl Evaluate,
    sample: &RadonSample,
    p: f64,
) -> Result<LpBound> {
    check_p(p)?;
    let mut values = Vec::with_capacity(sample.len());
    for x in sample.points() {
        values.push(u.evaluate(x)?);
    }
    let lp = lp_norm(&values, sample.weights(), p);
    let sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = sample.total_mass().powf(1.0 / p) * sup;
    Ok(LpBound {
        lp,
        bound,
        holds: lp <= bound * (1.0 + LP_BOUND_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: SpaceKind = SpaceKind::Euclidean { dim: 1 };

    fn pts(xs: &[f64]) -> Vec<SpacePoint> {
        xs.iter()
            .map(|x| SpacePoint::new(E1, vec![*x]).unwrap())
            .collect()
    }

    fn id(x: &SpacePoint) -> Result<f64> {
        Ok(x.coords()[0])
    }

    #[test]
    fn uniform_error_examples() {
        let net = pts(&[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(uniform_error(&id, &id, &net).unwrap(), 0.0);
        let shifted = |x: &SpacePoint| Ok(x.coords()[0] + 0.3);
        assert!((uniform_error(&shifted, &id, &net).unwrap() - 0.3).abs() < 1e-15);
        let coarse = vec![net[0].clone(), net[3].clone()];
        let sq = |x: &SpacePoint| Ok(x.coords()[0].powi(2));
        assert!(
            uniform_error(&sq, &id, &net).unwrap() >= uniform_error(&sq, &id, &coarse).unwrap()
        );
        assert!(uniform_error(&id, &id, &[]).is_err());
    }

    #[test]
    fn radon_sample_validation() {
        assert!(RadonSample::new(pts(&[0.0, 1.0]), vec![0.5, 0.6]).is_err());
        assert!(RadonSample::new(pts(&[0.0, 1.0]), vec![1.5, -0.5]).is_err());
        assert!(RadonSample::new(pts(&[0.0]), vec![]).is_err());
        let s = RadonSample::random(pts(&[0.0, 0.5, 1.0]), 11).unwrap();
        assert!((s.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
        assert_eq!(s, RadonSample::random(pts(&[0.0, 0.5, 1.0]), 11).unwrap());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<RadonSample>(&json).unwrap(), s);
    }

    #[test]
    fn lp_error_examples() {
        let s = RadonSample::random(pts(&[0.0, 0.3, 0.9]), 2).unwrap();
        assert_eq!(lp_error(&id, &id, &s, 2.0).unwrap(), 0.0);
        let c = |x: &SpacePoint| Ok(x.coords()[0] - 0.75);
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_error(&c, &id, &s, p).unwrap() - 0.75).abs() < 1e-14);
        }
        assert!(lp_error(&id, &id, &s, 0.5).is_err());

        let w2 = 0.3;
        let two = RadonSample::new(pts(&[0.0, 1.0]), vec![1.0 - w2, w2]).unwrap();
        let d = 2.0;
        let dev = |x: &SpacePoint| Ok(x.coords()[0] * d);
        let zero = |_: &SpacePoint| Ok(0.0);
        let l1 = lp_error(&dev, &zero, &two, 1.0).unwrap();
        let l2 = lp_error(&dev, &zero, &two, 2.0).unwrap();
        assert!((l1 - w2 * d).abs() < 1e-15);
        assert!((l2 - w2.sqrt() * d).abs() < 1e-15);
        assert!(l1 <= l2);
    }

    #[test]
    fn inequality_equality_and_zero_cases() {
        let s = RadonSample::uniform(pts(&[0.0, 0.5, 1.0])).unwrap();
        let c = |_: &SpacePoint| Ok(-1.25);
        let r = lp_uniform_inequality_check(&c, &s, 2.0).unwrap();
        assert!((r.lp - 1.25).abs() < 1e-15 && (r.bound - 1.25).abs() < 1e-15 && r.holds);
        let z = |_: &SpacePoint| Ok(0.0);
        let r = lp_uniform_inequality_check(&z, &s, 1.0).unwrap();
        assert_eq!(r.lp, 0.0);
        assert!(r.holds);
    }
}
