use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Target;
use crate::activation::SquashingFn;
use crate::error::{Error, Result};
use crate::linalg::{solve_least_squares, DenseMatrix};
use crate::network::{Network, RidgeUnit};
use crate::spaces::{sample_functionals, CompactSet, Functional, SpaceKind, SpacePoint};

/// Salt separating the bias stream from the functional stream of one seed.
const BIAS_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest absolute coordinate over a set of points.
pub fn net_radius(points: &[SpacePoint]) -> f64 {
    points.iter().map(SpacePoint::sup_norm).fold(0.0, f64::max)
}

/// `[-4·scale·radius, 4·scale·radius]`.
pub fn default_bias_range(scale: f64, radius: f64) -> (f64, f64) {
    let r = 4.0 * scale * radius;
    (-r, r)
}

/// Inner parameters `(f_j, b_j)` of a ridge dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub functionals: Vec<Functional>,
    pub biases: Vec<f64>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }
}

pub fn sample_dictionary(
    kind: SpaceKind,
    width: usize,
    scale: f64,
    bias_range: (f64, f64),
    seed: u64,
) -> Result<Dictionary> {
    if !(bias_range.0.is_finite() && bias_range.1.is_finite() && bias_range.0 <= bias_range.1) {
        return Err(Error::invalid("bias range must be finite with lo <= hi"));
    }
    let functionals = sample_functionals(kind, width, scale, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ BIAS_STREAM);
    let biases = (0..width)
        .map(|_| rng.gen_range(bias_range.0..=bias_range.1))
        .collect();
    Ok(Dictionary {
        functionals,
        biases,
    })
}

fn feature_matrix(
    points: &[SpacePoint],
    dict: &Dictionary,
    psi: &SquashingFn,
) -> Result<DenseMatrix> {
    for p in points {
        for f in &dict.functionals {
            f.kind().ensure_same(&p.kind())?;
        }
    }
    Ok(DenseMatrix::from_fn(points.len(), dict.len(), |r, c| {
        psi.apply(dict.functionals[c].apply(points[r].coords()) + dict.biases[c])
    }))
}

/// Solves the ridge least-squares problem for the output weights of a fixed
/// dictionary on `points`.
pub fn fit_dictionary(
    points: &[SpacePoint],
    values: &[f64],
    dict: &Dictionary,
    psi: &SquashingFn,
    ridge: f64,
) -> Result<Network> {
    if points.is_empty() {
        return Err(Error::Empty("training net"));
    }
    if dict.is_empty() {
        return Err(Error::Empty("ridge dictionary"));
    }
    if values.len() != points.len() {
        return Err(Error::LengthMismatch {
            context: "training values",
            expected: points.len(),
            found: values.len(),
        });
    }
    psi.validate_params()?;
    let a = feature_matrix(points, dict, psi)?;
    let sol = solve_least_squares(&a, values, ridge)?;
    let units = dict
        .functionals
        .iter()
        .zip(&dict.biases)
        .zip(&sol.coefficients)
        .map(|((f, b), w)| RidgeUnit::new(*w, *b, f.clone()))
        .collect();
    Network::new(psi.clone(), units)
}

/// Hyperparameters of the random-feature fitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFeatures {
    /// Coefficient range of the sampled functionals.
    pub scale: f64,
    #[serde(default)]
    pub ridge: f64,
    /// Defaults to [`default_bias_range`] over the training net.
    #[serde(default)]
    pub bias_range: Option<(f64, f64)>,
}

/// Samples `width` functionals and biases, then solves for the output weights
/// on the training net `net(K, train_resolution)`.
pub fn fit_random_features(
    set: &CompactSet,
    target: &Target,
    psi: &SquashingFn,
    width: usize,
    params: &RandomFeatures,
    train_resolution: usize,
    seed: u64,
) -> Result<Network> {
    let points = set.net(train_resolution)?;
    let values = target.values(&points)?;
    fit_random_features_on(&points, &values, set.kind(), psi, width, params, seed)
}

pub(crate) fn fit_random_features_on(
    points: &[SpacePoint],
    values: &[f64],
    kind: SpaceKind,
    psi: &SquashingFn,
    width: usize,
    params: &RandomFeatures,
    seed: u64,
) -> Result<Network> {
    let range = params
        .bias_range
        .unwrap_or_else(|| default_bias_range(params.scale, net_radius(points)));
    let dict = sample_dictionary(kind, width, params.scale, range, seed)?;
    fit_dictionary(points, values, &dict, psi, params.ridge)
}

/// Hyperparameters of the greedy fitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Greedy {
    pub scale: f64,
    pub pool_size: usize,
    #[serde(default)]
    pub bias_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyFit {
    pub network: Network,
    /// RMS residual on the training net: entry 0 is the target itself, entry
    /// `k` the residual after `k` units.
    pub residual_rms: Vec<f64>,
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
}

/// Pure greedy selection: at step `k` the unit from `pool(k)` with the largest
/// residual reduction (after its optimal scalar weight) is appended.
pub fn greedy_on_points(
    points: &[SpacePoint],
    values: &[f64],
    psi: &SquashingFn,
    steps: usize,
    mut pool: impl FnMut(usize) -> Result<Vec<(Functional, f64)>>,
) -> Result<GreedyFit> {
    if points.is_empty() {
        return Err(Error::Empty("training net"));
    }
    if values.len() != points.len() {
        return Err(Error::LengthMismatch {
            context: "training values",
            expected: points.len(),
            found: values.len(),
        });
    }
    if steps == 0 {
        return Err(Error::invalid("greedy width must be >= 1"));
    }
    psi.validate_params()?;
    let mut residual = values.to_vec();
    let mut trace = vec![rms(&residual)];
    let mut units = Vec::with_capacity(steps);
    for step in 0..steps {
        let candidates = pool(step)?;
        if candidates.is_empty() {
            return Err(Error::Empty("greedy candidate pool"));
        }
        // (reduction, index, weight, column)
        let mut best: Option<(f64, usize, f64, Vec<f64>)> = None;
        for (idx, (f, b)) in candidates.iter().enumerate() {
            let mut col = Vec::with_capacity(points.len());
            for p in points {
                col.push(psi.apply(f.eval(p)? + b));
            }
            let norm2: f64 = col.iter().map(|c| c * c).sum();
            let (gain, weight) = if norm2 > 0.0 {
                let dot: f64 = col.iter().zip(&residual).map(|(c, r)| c * r).sum();
                (dot * dot / norm2, dot / norm2)
            } else {
                (0.0, 0.0)
            };
            if best.as_ref().is_none_or(|(g, ..)| gain > *g) {
                best = Some((gain, idx, weight, col));
            }
        }
        let (_, idx, weight, col) = best.expect("nonempty pool");
        let prev = *trace.last().expect("trace starts nonempty");
        let mut updated: Vec<f64> = residual
            .iter()
            .zip(&col)
            .map(|(r, c)| r - weight * c)
            .collect();
        let mut weight = weight;
        let mut now = rms(&updated);
        if now > prev {
            // Rounding can only lose here; the zero-weight unit keeps the floor.
            weight = 0.0;
            updated = residual.clone();
            now = prev;
        }
        residual = updated;
        trace.push(now);
        let (f, b) = candidates[idx].clone();
        units.push(RidgeUnit::new(weight, b, f));
    }
    Ok(GreedyFit {
        network: Network::new(psi.clone(), units)?,
        residual_rms: trace,
    })
}

pub fn fit_greedy(
    set: &CompactSet,
    target: &Target,
    psi: &SquashingFn,
    steps: usize,
    params: &Greedy,
    train_resolution: usize,
    seed: u64,
) -> Result<GreedyFit> {
    let points = set.net(train_resolution)?;
    let values = target.values(&points)?;
    fit_greedy_on(&points, &values, set.kind(), psi, steps, params, seed)
}

pub(crate) fn fit_greedy_on(
    points: &[SpacePoint],
    values: &[f64],
    kind: SpaceKind,
    psi: &SquashingFn,
    steps: usize,
    params: &Greedy,
    seed: u64,
) -> Result<GreedyFit> {
    if params.pool_size == 0 {
        return Err(Error::Empty("greedy candidate pool"));
    }
    let range = params
        .bias_range
        .unwrap_or_else(|| default_bias_range(params.scale, net_radius(points)));
    greedy_on_points(points, values, psi, steps, |step| {
        let step_seed = seed
            .wrapping_mul(0x5851_F42D_4C95_7F2D)
            .wrapping_add(step as u64);
        let d = sample_dictionary(kind, params.pool_size, params.scale, range, step_seed)?;
        Ok(d.functionals.into_iter().zip(d.biases).collect())
    })
}
