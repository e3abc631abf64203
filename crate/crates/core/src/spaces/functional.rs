use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{trapezoid_weights, ExprContext, ScalarExpr, SpaceKind, SpacePoint};
use crate::error::{Error, Result};

/// How a grid-function functional is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    /// Trapezoid-weighted nodal sum, `Σ q_i c_i g(t_i)`.
    Trapezoid,
    /// Evaluation at a single node.
    PointEvaluation,
}

/// A continuous linear functional, stored by its coefficients.
///
/// For every kind the pairing is `f(x) = Σ weights[i] · x[i]`, summed in slot
/// order. On the grid kind the weights already include the quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalDesc", into = "FunctionalDesc")]
pub struct Functional {
    kind: SpaceKind,
    weights: Vec<f64>,
    rule: Option<GridRule>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalDesc {
    space: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<GridRule>,
    weights: Vec<f64>,
}

impl TryFrom<FunctionalDesc> for Functional {
    type Error = Error;

    fn try_from(d: FunctionalDesc) -> Result<Self> {
        Functional::build(d.space, d.weights, d.rule)
    }
}

impl From<Functional> for FunctionalDesc {
    fn from(f: Functional) -> Self {
        FunctionalDesc {
            space: f.kind,
            rule: f.rule,
            weights: f.weights,
        }
    }
}

impl Functional {
    fn build(kind: SpaceKind, weights: Vec<f64>, rule: Option<GridRule>) -> Result<Self> {
        kind.validate()?;
        if weights.len() != kind.dimension() {
            return Err(Error::LengthMismatch {
                context: "functional weights",
                expected: kind.dimension(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("functional weights"));
        }
        match (kind.is_grid(), rule) {
            (true, None) => return Err(Error::invalid("grid functionals need a rule tag")),
            (false, Some(_)) => {
                return Err(Error::invalid("rule tags apply to grid functionals only"))
            }
            (true, Some(GridRule::PointEvaluation)) => {
                let nonzero: Vec<f64> = weights.iter().copied().filter(|w| *w != 0.0).collect();
                if nonzero != [1.0] {
                    return Err(Error::invalid(
                        "point evaluation must have exactly one nonzero weight equal to 1",
                    ));
                }
            }
            _ => {}
        }
        Ok(Functional {
            kind,
            weights,
            rule,
        })
    }

    /// Dot-product (Euclidean) or coefficient (sequence) functional.
    pub fn new(kind: SpaceKind, weights: Vec<f64>) -> Result<Self> {
        Self::build(kind, weights, None)
    }

    /// Grid functional with explicit nodal weights.
    pub fn grid(kind: SpaceKind, weights: Vec<f64>, rule: GridRule) -> Result<Self> {
        Self::build(kind, weights, Some(rule))
    }

    /// `g ↦ Σ q_i c(t_i) g(t_i)` with trapezoid weights `q`.
    pub fn trapezoid(kind: SpaceKind, density: &[f64]) -> Result<Self> {
        if !kind.is_grid() {
            return Err(Error::invalid("trapezoid functionals live on grid spaces"));
        }
        if density.len() != kind.dimension() {
            return Err(Error::LengthMismatch {
                context: "trapezoid density",
                expected: kind.dimension(),
                found: density.len(),
            });
        }
        let q = trapezoid_weights(kind.dimension());
        let w = q.iter().zip(density).map(|(q, c)| q * c).collect();
        Self::grid(kind, w, GridRule::Trapezoid)
    }

    pub fn point_evaluation(kind: SpaceKind, node: usize) -> Result<Self> {
        if !kind.is_grid() {
            return Err(Error::invalid("point evaluations live on grid spaces"));
        }
        Self::unit(kind, node).and_then(|w| Self::grid(kind, w, GridRule::PointEvaluation))
    }

    /// The `i`-th canonical functional: coordinate `i`, or evaluation at node `i`.
    pub fn coordinate(kind: SpaceKind, i: usize) -> Result<Self> {
        if kind.is_grid() {
            return Self::point_evaluation(kind, i);
        }
        Self::unit(kind, i).and_then(|w| Self::new(kind, w))
    }

    pub fn zero(kind: SpaceKind) -> Self {
        Functional {
            kind,
            weights: vec![0.0; kind.dimension()],
            rule: kind.is_grid().then_some(GridRule::Trapezoid),
        }
    }

    fn unit(kind: SpaceKind, i: usize) -> Result<Vec<f64>> {
        let n = kind.dimension();
        if i >= n {
            return Err(Error::invalid(format!("slot {i} out of range for {kind}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(w)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> Option<GridRule> {
        self.rule
    }

    pub fn eval(&self, x: &SpacePoint) -> Result<f64> {
        self.kind.ensure_same(&x.kind())?;
        Ok(self.apply(x.coords()))
    }

    pub(crate) fn apply(&self, coords: &[f64]) -> f64 {
        self.weights.iter().zip(coords).map(|(w, c)| w * c).sum()
    }
}

/// Coordinate functionals, or point evaluations at every grid node.
pub fn canonical_family(kind: SpaceKind) -> Vec<Functional> {
    (0..kind.dimension())
        .map(|i| Functional::coordinate(kind, i).expect("index in range"))
        .collect()
}

/// `count` functionals with coefficients i.i.d. uniform on `[-scale, scale]`.
///
/// Sequence coefficients are damped by `i^(-decay)`; grid coefficients are a
/// density multiplied by the trapezoid weights.
pub fn sample_functionals(
    kind: SpaceKind,
    count: usize,
    scale: f64,
    seed: u64,
) -> Result<Vec<Functional>> {
    kind.validate()?;
    if count == 0 {
        return Err(Error::invalid("functional count must be positive"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("functional scale must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kind.dimension();
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
            match kind {
                SpaceKind::Euclidean { .. } => Functional::new(kind, raw),
                SpaceKind::Sequence { decay, .. } => {
                    let c = raw
                        .iter()
                        .enumerate()
                        .map(|(i, r)| r * ((i + 1) as f64).powf(-decay))
                        .collect();
                    Functional::new(kind, c)
                }
                SpaceKind::GridFunction { .. } => Functional::trapezoid(kind, &raw),
            }
        })
        .collect()
}

/// First functional in `family` with `|f(x) - f(y)| > tol`.
pub fn separation_witness<'a>(
    family: &'a [Functional],
    x: &SpacePoint,
    y: &SpacePoint,
    tol: f64,
) -> Result<Option<&'a Functional>> {
    x.kind().ensure_same(&y.kind())?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::invalid("separation tolerance must be nonnegative"));
    }
    for f in family {
        if (f.eval(x)? - f.eval(y)?).abs() > tol {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Serializable functional descriptor, resolved against a space kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Zero,
    /// Canonical functional `i` (0-based): coordinate or node evaluation.
    Coordinate(usize),
    /// Explicit coefficients (Euclidean and sequence kinds).
    Weights(Vec<f64>),
    /// Coefficients given by an expression of `index` / `node`.
    Formula(ScalarExpr),
    /// Evaluation at grid node `k`.
    PointEvaluation(usize),
    /// Trapezoid integral against a density expression of `node`.
    Trapezoid(ScalarExpr),
}

impl FunctionalSpec {
    pub fn resolve(&self, kind: SpaceKind) -> Result<Functional> {
        let slots = |e: &ScalarExpr| -> Result<Vec<f64>> {
            if e.max_param().is_some() {
                return Err(Error::invalid(
                    "functional formulas cannot reference parameters",
                ));
            }
            Ok((0..kind.dimension())
                .map(|i| {
                    e.eval(&ExprContext {
                        params: &[],
                        node: kind.node(i),
                        index: (i + 1) as f64,
                    })
                })
                .collect())
        };
        match self {
            FunctionalSpec::Zero => Ok(Functional::zero(kind)),
            FunctionalSpec::Coordinate(i) => Functional::coordinate(kind, *i),
            FunctionalSpec::Weights(w) if !kind.is_grid() => Functional::new(kind, w.clone()),
            FunctionalSpec::Formula(e) if !kind.is_grid() => Functional::new(kind, slots(e)?),
            FunctionalSpec::PointEvaluation(k) => Functional::point_evaluation(kind, *k),
            FunctionalSpec::Trapezoid(e) => Functional::trapezoid(kind, &slots(e)?),
            FunctionalSpec::Weights(_) | FunctionalSpec::Formula(_) => Err(Error::invalid(
                "grid functionals are given as trapezoid densities or point evaluations",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R2: SpaceKind = SpaceKind::Euclidean { dim: 2 };

    #[test]
    fn euclidean_dot_product() {
        let f = Functional::new(R2, vec![1.0, 2.0]).unwrap();
        let x = SpacePoint::new(R2, vec![3.0, 4.0]).unwrap();
        assert_eq!(f.eval(&x).unwrap(), 11.0);
    }

    #[test]
    fn trapezoid_integrates_constants() {
        // Dyadic spacing: the weights sum to one with no rounding.
        for nodes in [2, 3, 5, 9, 17, 33, 65] {
            let k = SpaceKind::GridFunction { nodes };
            let f = FunctionalSpec::Trapezoid(ScalarExpr::Const(1.0))
                .resolve(k)
                .unwrap();
            let one = SpacePoint::from_fn(k, |_| 1.0).unwrap();
            assert_eq!(f.eval(&one).unwrap(), 1.0, "nodes = {nodes}");
        }
        for nodes in [4, 7, 10, 11, 100] {
            let k = SpaceKind::GridFunction { nodes };
            let f = FunctionalSpec::Trapezoid(ScalarExpr::Const(1.0))
                .resolve(k)
                .unwrap();
            let one = SpacePoint::from_fn(k, |_| 1.0).unwrap();
            assert!((f.eval(&one).unwrap() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn zero_functional_vanishes() {
        for k in [
            R2,
            SpaceKind::Sequence { len: 5, decay: 1.5 },
            SpaceKind::GridFunction { nodes: 9 },
        ] {
            let x =
                SpacePoint::new(k, (0..k.dimension()).map(|i| i as f64 - 2.5).collect()).unwrap();
            assert_eq!(Functional::zero(k).eval(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let f = Functional::zero(R2);
        let x = SpacePoint::zero(SpaceKind::Euclidean { dim: 3 });
        assert!(matches!(f.eval(&x), Err(Error::KindMismatch { .. })));
        let y = SpacePoint::zero(SpaceKind::Sequence { len: 2, decay: 1.5 });
        assert!(matches!(f.eval(&y), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn point_evaluation_invariant() {
        let k = SpaceKind::GridFunction { nodes: 4 };
        assert!(Functional::grid(k, vec![0.0, 1.0, 0.0, 0.0], GridRule::PointEvaluation).is_ok());
        assert!(Functional::grid(k, vec![0.0, 2.0, 0.0, 0.0], GridRule::PointEvaluation).is_err());
        assert!(Functional::grid(k, vec![1.0, 1.0, 0.0, 0.0], GridRule::PointEvaluation).is_err());
        assert!(Functional::new(k, vec![0.0; 4]).is_err());
    }

    #[test]
    fn sampling_contract() {
        let fs = sample_functionals(R2, 3, 1.0, 7).unwrap();
        assert_eq!(fs.len(), 3);
        assert!(fs
            .iter()
            .flat_map(|f| f.weights())
            .all(|w| (-1.0..=1.0).contains(w)));
        assert_eq!(fs, sample_functionals(R2, 3, 1.0, 7).unwrap());
        assert_ne!(fs, sample_functionals(R2, 3, 1.0, 8).unwrap());
        assert!(sample_functionals(R2, 3, 0.0, 7).is_err());
        assert!(sample_functionals(R2, 0, 1.0, 7).is_err());
    }

    #[test]
    fn sequence_sampling_decays() {
        let k = SpaceKind::Sequence {
            len: 50,
            decay: 2.0,
        };
        for f in sample_functionals(k, 20, 3.0, 1).unwrap() {
            for (i, w) in f.weights().iter().enumerate() {
                assert!(w.abs() <= 3.0 / ((i + 1) as f64).powi(2) + 1e-15);
            }
        }
    }

    #[test]
    fn separation_examples() {
        let family = canonical_family(R2);
        let x = SpacePoint::new(R2, vec![0.0, 0.0]).unwrap();
        let y = SpacePoint::new(R2, vec![0.0, 1.0]).unwrap();
        let w = separation_witness(&family, &x, &y, 1e-12).unwrap().unwrap();
        assert_eq!(w, &family[1]);
        assert!(separation_witness(&family, &x, &x, 1e-12)
            .unwrap()
            .is_none());

        let g = SpaceKind::GridFunction { nodes: 11 };
        let family = canonical_family(g);
        let a = SpacePoint::from_fn(g, |t| t * t).unwrap();
        let mut coords = a.coords().to_vec();
        coords[6] += 0.5;
        let b = SpacePoint::new(g, coords).unwrap();
        let w = separation_witness(&family, &a, &b, 1e-12).unwrap().unwrap();
        assert_eq!(w, &Functional::point_evaluation(g, 6).unwrap());
    }

    #[test]
    fn specs_resolve() {
        let seq = SpaceKind::Sequence { len: 4, decay: 1.5 };
        let f = FunctionalSpec::Formula(ScalarExpr::pow(ScalarExpr::Index, -1.0))
            .resolve(seq)
            .unwrap();
        assert_eq!(f.weights(), &[1.0, 0.5, 1.0 / 3.0, 0.25]);
        let g = SpaceKind::GridFunction { nodes: 3 };
        assert!(FunctionalSpec::Weights(vec![1.0; 3]).resolve(g).is_err());
        assert_eq!(
            FunctionalSpec::Coordinate(2).resolve(g).unwrap().rule(),
            Some(GridRule::PointEvaluation)
        );
    }

    #[test]
    fn json_round_trip_checks_invariants() {
        let f = Functional::point_evaluation(SpaceKind::GridFunction { nodes: 3 }, 1).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<Functional>(&s).unwrap(), f);
        let bad = r#"{"space": {"grid_function": {"nodes": 3}}, "rule": "point_evaluation", "weights": [0.5, 0, 0]}"#;
        assert!(serde_json::from_str::<Functional>(bad).is_err());
    }
}
