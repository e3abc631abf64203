//! Finite sums of ridge units `x ↦ Σ_j ω_j Ψ(f_j(x) + b_j)` over linear functionals.

use serde::{Deserialize, Serialize};

use crate::activation::SquashingFn;
use crate::error::{Error, Result};
use crate::spaces::{Functional, SpaceKind, SpacePoint};
use crate::Evaluate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeUnit {
    pub weight: f64,
    pub bias: f64,
    pub functional: Functional,
}

impl RidgeUnit {
    pub fn new(weight: f64, bias: f64, functional: Functional) -> Self {
        RidgeUnit {
            weight,
            bias,
            functional,
        }
    }
}

/// An element of the network class over one space with one shared activation.
///
/// Evaluation sums units in their stored order, so results are bit-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDesc", into = "NetworkDesc")]
pub struct Network {
    activation: SquashingFn,
    units: Vec<RidgeUnit>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDesc {
    activation: SquashingFn,
    units: Vec<RidgeUnit>,
}

impl TryFrom<NetworkDesc> for Network {
    type Error = Error;

    fn try_from(d: NetworkDesc) -> Result<Self> {
        Network::new(d.activation, d.units)
    }
}

impl From<Network> for NetworkDesc {
    fn from(n: Network) -> Self {
        NetworkDesc {
            activation: n.activation,
            units: n.units,
        }
    }
}

impl Network {
    pub fn new(activation: SquashingFn, units: Vec<RidgeUnit>) -> Result<Self> {
        activation.validate_params()?;
        let first = units.first().ok_or(Error::Empty("network units"))?;
        let kind = first.functional.kind();
        for u in &units {
            kind.ensure_same(&u.functional.kind())?;
            if !(u.weight.is_finite() && u.bias.is_finite()) {
                return Err(Error::NonFinite("ridge unit weight or bias"));
            }
        }
        Ok(Network { activation, units })
    }

    /// The empty sum, stored as one unit with zero output weight.
    pub fn zero(kind: SpaceKind, activation: SquashingFn) -> Self {
        Network {
            activation,
            units: vec![RidgeUnit::new(0.0, 0.0, Functional::zero(kind))],
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.units[0].functional.kind()
    }

    pub fn activation(&self) -> &SquashingFn {
        &self.activation
    }

    pub fn units(&self) -> &[RidgeUnit] {
        &self.units
    }

    pub fn width(&self) -> usize {
        self.units.len()
    }

    /// `Σ |ω_j|`, an upper bound on `|F(x)|`.
    pub fn weight_norm(&self) -> f64 {
        self.units.iter().map(|u| u.weight.abs()).sum()
    }

    pub fn eval(&self, x: &SpacePoint) -> Result<f64> {
        self.kind().ensure_same(&x.kind())?;
        Ok(self.apply(x.coords()))
    }

    pub(crate) fn apply(&self, coords: &[f64]) -> f64 {
        self.units
            .iter()
            .map(|u| u.weight * self.activation.apply(u.functional.apply(coords) + u.bias))
            .sum()
    }

    /// `Σ_i c_i N_i` by concatenating unit lists with scaled output weights.
    pub fn combine(nets: &[Network], coefficients: &[f64]) -> Result<Network> {
        if nets.len() != coefficients.len() {
            return Err(Error::LengthMismatch {
                context: "network combination coefficients",
                expected: nets.len(),
                found: coefficients.len(),
            });
        }
        let first = nets.first().ok_or(Error::Empty("networks to combine"))?;
        let mut units = Vec::with_capacity(nets.iter().map(Network::width).sum());
        for (n, c) in nets.iter().zip(coefficients) {
            if n.activation != first.activation {
                return Err(Error::ActivationMismatch);
            }
            first.kind().ensure_same(&n.kind())?;
            units.extend(n.units.iter().map(|u| RidgeUnit {
                weight: c * u.weight,
                ..u.clone()
            }));
        }
        Network::new(first.activation.clone(), units)
    }
}

impl Evaluate for Network {
    fn evaluate(&self, x: &SpacePoint) -> Result<f64> {
        self.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spaces::sample_functionals;

    const R3: SpaceKind = SpaceKind::Euclidean { dim: 3 };

    fn random_net(seed: u64, width: usize) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fs = sample_functionals(R3, width, 2.0, seed).unwrap();
        let units = fs
            .into_iter()
            .map(|f| RidgeUnit::new(rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0), f))
            .collect();
        Network::new(SquashingFn::logistic(), units).unwrap()
    }

    fn point(rng: &mut ChaCha8Rng) -> SpacePoint {
        SpacePoint::new(R3, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_functional_unit() {
        let net = Network::new(
            SquashingFn::logistic(),
            vec![RidgeUnit::new(2.0, 0.0, Functional::zero(R3))],
        )
        .unwrap();
        assert_eq!(net.eval(&SpacePoint::zero(R3)).unwrap(), 1.0);
    }

    #[test]
    fn matches_classical_ridge_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = random_net(3, 25);
        let psi = |t: f64| 1.0 / (1.0 + (-t).exp());
        for _ in 0..200 {
            let x = point(&mut rng);
            let classical: f64 = net
                .units()
                .iter()
                .map(|u| {
                    let a = u.functional.weights();
                    let dot = a[0] * x.coords()[0] + a[1] * x.coords()[1] + a[2] * x.coords()[2];
                    u.weight * psi(dot + u.bias)
                })
                .sum();
            assert!((net.eval(&x).unwrap() - classical).abs() <= 1e-12);
        }
    }

    #[test]
    fn cancellation_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_net(1, 8);
        let zero = Network::combine(&[a.clone(), a.clone()], &[1.0, -1.0]).unwrap();
        assert_eq!(zero.width(), 16);
        for _ in 0..100 {
            let x = point(&mut rng);
            assert!(zero.eval(&x).unwrap().abs() <= 1e-12);
            assert!(a.eval(&x).unwrap().abs() <= a.weight_norm());
            assert_eq!(
                Network::combine(std::slice::from_ref(&a), &[1.0])
                    .unwrap()
                    .eval(&x)
                    .unwrap(),
                a.eval(&x).unwrap()
            );
        }
    }

    #[test]
    fn combine_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_net(1, 6);
        let b = random_net(2, 9);
        let c = Network::combine(&[a.clone(), b.clone()], &[2.0, 3.0]).unwrap();
        for _ in 0..100 {
            let x = point(&mut rng);
            let expected = 2.0 * a.eval(&x).unwrap() + 3.0 * b.eval(&x).unwrap();
            assert!((c.eval(&x).unwrap() - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn combine_rejects_mismatches() {
        let a = random_net(1, 2);
        let mut b = random_net(2, 2);
        b.activation = SquashingFn::Ramp;
        assert_eq!(
            Network::combine(&[a.clone(), b], &[1.0, 1.0]),
            Err(Error::ActivationMismatch)
        );
        let c = Network::zero(SpaceKind::Euclidean { dim: 2 }, SquashingFn::logistic());
        assert!(matches!(
            Network::combine(&[a.clone(), c], &[1.0, 1.0]),
            Err(Error::KindMismatch { .. })
        ));
        assert!(Network::combine(&[a], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(Network::new(SquashingFn::logistic(), vec![]).is_err());
        let f2 = Functional::zero(SpaceKind::Euclidean { dim: 2 });
        assert!(Network::new(
            SquashingFn::logistic(),
            vec![
                RidgeUnit::new(1.0, 0.0, Functional::zero(R3)),
                RidgeUnit::new(1.0, 0.0, f2)
            ]
        )
        .is_err());
        assert!(Network::new(
            SquashingFn::logistic(),
            vec![RidgeUnit::new(f64::NAN, 0.0, Functional::zero(R3))]
        )
        .is_err());
        let net = random_net(4, 3);
        assert!(net
            .eval(&SpacePoint::zero(SpaceKind::Euclidean { dim: 2 }))
            .is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let net = random_net(8, 7);
        let back: Network = serde_json::from_str(&serde_json::to_string(&net).unwrap()).unwrap();
        assert_eq!(back, net);
    }
}
