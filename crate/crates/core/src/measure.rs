//! Finite signed measures with finitely many atoms, their pushforwards to
//! `ℝ^m` under tuples of functionals, and the ridge-integral searches that
//! witness a nonzero measure.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::SquashingFn;
use crate::error::{Error, Result};
use crate::spaces::{sample_functionals, Functional, SpaceKind, SpacePoint};
use crate::Evaluate;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: SpacePoint,
    pub weight: f64,
}

/// `Σ_i w_i δ_{x_i}` on a space. Atoms of weight exactly zero are dropped,
/// so the zero measure is the empty atom list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDesc", into = "MeasureDesc")]
pub struct AtomicSignedMeasure {
    space: SpaceKind,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDesc {
    point: Vec<f64>,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDesc {
    space: SpaceKind,
    atoms: Vec<AtomDesc>,
}

impl TryFrom<MeasureDesc> for AtomicSignedMeasure {
    type Error = Error;

    fn try_from(d: MeasureDesc) -> Result<Self> {
        let atoms = d
            .atoms
            .into_iter()
            .map(|a| {
                Ok(Atom {
                    point: SpacePoint::new(d.space, a.point)?,
                    weight: a.weight,
                })
            })
            .collect::<Result<_>>()?;
        AtomicSignedMeasure::new(d.space, atoms)
    }
}

impl From<AtomicSignedMeasure> for MeasureDesc {
    fn from(m: AtomicSignedMeasure) -> Self {
        MeasureDesc {
            space: m.space,
            atoms: m
                .atoms
                .into_iter()
                .map(|a| AtomDesc {
                    point: a.point.coords().to_vec(),
                    weight: a.weight,
                })
                .collect(),
        }
    }
}

fn position_key(coords: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same position.
    coords
        .iter()
        .map(|c| if *c == 0.0 { 0 } else { c.to_bits() })
        .collect()
}

impl AtomicSignedMeasure {
    pub fn new(space: SpaceKind, atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            space.ensure_same(&a.point.kind())?;
            if !a.weight.is_finite() {
                return Err(Error::NonFinite("atom weight"));
            }
        }
        Ok(AtomicSignedMeasure {
            space,
            atoms: atoms.into_iter().filter(|a| a.weight != 0.0).collect(),
        })
    }

    pub fn zero(space: SpaceKind) -> Self {
        AtomicSignedMeasure {
            space,
            atoms: Vec::new(),
        }
    }

    pub fn from_pairs(space: SpaceKind, pairs: Vec<(SpacePoint, f64)>) -> Result<Self> {
        Self::new(
            space,
            pairs
                .into_iter()
                .map(|(point, weight)| Atom { point, weight })
                .collect(),
        )
    }

    pub fn space(&self) -> SpaceKind {
        self.space
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `|μ|(K) = Σ |w_i|`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Sums atoms at exactly equal points, keeping first-occurrence order.
    pub fn merged(&self) -> AtomicSignedMeasure {
        let mut acc: IndexMap<Vec<u64>, Atom> = IndexMap::new();
        for a in &self.atoms {
            acc.entry(position_key(a.point.coords()))
                .and_modify(|e| e.weight += a.weight)
                .or_insert_with(|| a.clone());
        }
        AtomicSignedMeasure {
            space: self.space,
            atoms: acc.into_values().filter(|a| a.weight != 0.0).collect(),
        }
    }

    /// `∫ g dμ = Σ_i w_i g(x_i)`, summed in atom order.
    pub fn integrate<G: Evaluate + ?Sized>(&self, g: &G) -> Result<f64> {
        let mut s = 0.0;
        for a in &self.atoms {
            s += a.weight * g.evaluate(&a.point)?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushAtom {
    pub position: Vec<f64>,
    pub weight: f64,
}

/// An atomic signed measure on `ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PushDesc", into = "PushDesc")]
pub struct PushforwardMeasure {
    dim: usize,
    atoms: Vec<PushAtom>,
    merged: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PushDesc {
    dim: usize,
    atoms: Vec<PushAtom>,
    #[serde(default)]
    merged: bool,
}

impl TryFrom<PushDesc> for PushforwardMeasure {
    type Error = Error;

    fn try_from(d: PushDesc) -> Result<Self> {
        let m = PushforwardMeasure::new(d.dim, d.atoms)?;
        Ok(if d.merged { m.merge() } else { m })
    }
}

impl From<PushforwardMeasure> for PushDesc {
    fn from(m: PushforwardMeasure) -> Self {
        PushDesc {
            dim: m.dim,
            atoms: m.atoms,
            merged: m.merged,
        }
    }
}

impl PushforwardMeasure {
    /// Unmerged measure from raw atoms.
    pub fn new(dim: usize, atoms: Vec<PushAtom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("pushforward dimension must be >= 1"));
        }
        for a in &atoms {
            if a.position.len() != dim {
                return Err(Error::LengthMismatch {
                    context: "pushforward atom position",
                    expected: dim,
                    found: a.position.len(),
                });
            }
            if !a.weight.is_finite() || a.position.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite("pushforward atom"));
            }
        }
        Ok(PushforwardMeasure {
            dim,
            atoms,
            merged: false,
        })
    }

    pub fn from_pairs(dim: usize, pairs: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(
            dim,
            pairs
                .into_iter()
                .map(|(position, weight)| PushAtom { position, weight })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[PushAtom] {
        &self.atoms
    }

    pub fn is_merged(&self) -> bool {
        self.merged
    }

    pub fn is_zero(&self) -> bool {
        self.merge().atoms.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Sums atoms at exactly equal positions and drops zero weights.
    pub fn merge(&self) -> PushforwardMeasure {
        let mut acc: IndexMap<Vec<u64>, PushAtom> = IndexMap::new();
        for a in &self.atoms {
            acc.entry(position_key(&a.position))
                .and_modify(|e| e.weight += a.weight)
                .or_insert_with(|| a.clone());
        }
        PushforwardMeasure {
            dim: self.dim,
            atoms: acc.into_values().filter(|a| a.weight != 0.0).collect(),
            merged: true,
        }
    }

    /// Pairs of distinct atoms whose positions agree to `tol` in every
    /// coordinate. Exact merging never collapses these; this only reports them.
    pub fn near_coincident_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                let (a, b) = (&self.atoms[i].position, &self.atoms[j].position);
                let gap = a
                    .iter()
                    .zip(b)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if gap > 0.0 && gap <= tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(&a.position)).sum()
    }
}

/// `ν = μ ∘ F⁻¹` for `F = (f_1, …, f_m)`, with coincident images merged.
pub fn pushforward(mu: &AtomicSignedMeasure, fs: &[Functional]) -> Result<PushforwardMeasure> {
    if fs.is_empty() {
        return Err(Error::Empty("pushforward functionals"));
    }
    for f in fs {
        mu.space.ensure_same(&f.kind())?;
    }
    let atoms = mu
        .atoms
        .iter()
        .map(|a| PushAtom {
            position: fs.iter().map(|f| f.apply(a.point.coords())).collect(),
            weight: a.weight,
        })
        .collect();
    Ok(PushforwardMeasure::new(fs.len(), atoms)?.merge())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariables {
    /// `∫ G dν` over the merged pushforward.
    pub lhs: f64,
    /// `Σ_i w_i G(F(x_i))` over the source atoms.
    pub rhs: f64,
}

impl ChangeOfVariables {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn holds(&self, rel: f64) -> bool {
        self.gap() <= rel * (1.0 + self.rhs.abs())
    }
}

pub fn change_of_variables_check(
    mu: &AtomicSignedMeasure,
    fs: &[Functional],
    g: impl Fn(&[f64]) -> f64,
) -> Result<ChangeOfVariables> {
    let nu = pushforward(mu, fs)?;
    let lhs = nu.integrate(&g);
    let mut rhs = 0.0;
    for a in mu.atoms() {
        let image = fs
            .iter()
            .map(|f| f.eval(&a.point))
            .collect::<Result<Vec<_>>>()?;
        rhs += a.weight * g(&image);
    }
    Ok(ChangeOfVariables { lhs, rhs })
}

/// `G(t) = tᵀ Q t + l·t + c` on `ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadratic {
    pub matrix: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.linear.len();
        if self.matrix.len() != m || self.matrix.iter().any(|r| r.len() != m) {
            return Err(Error::invalid(
                "quadratic matrix must be m × m with m = len(linear)",
            ));
        }
        Ok(())
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        let mut s = self.constant;
        for (i, ti) in t.iter().enumerate() {
            s += self.linear[i] * ti;
            for (j, tj) in t.iter().enumerate() {
                s += self.matrix[i][j] * ti * tj;
            }
        }
        s
    }
}

/// Candidate `(w, b)` and its signed ridge integral `∫ Ψ(w·t + b) dν(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub w: Vec<f64>,
    pub b: f64,
    pub value: f64,
}

/// Search space for [`discriminate`].
///
/// A full lattice over `w_range^m × b_range` is scanned first. Then
/// `refinements` seeded trials each propose a `w` (a jitter of the incumbent,
/// an incumbent rescaled by up to `max_scale`, or a fresh vector with entries
/// up to `max_scale · max|w_range|`) and try biases centred between
/// consecutive projected atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorSearch {
    pub w_range: (f64, f64),
    pub w_points: usize,
    pub b_range: (f64, f64),
    pub b_points: usize,
    pub refinements: usize,
    pub max_scale: f64,
    pub seed: u64,
}

impl Default for DiscriminatorSearch {
    fn default() -> Self {
        DiscriminatorSearch {
            w_range: (-20.0, 20.0),
            w_points: 21,
            b_range: (-40.0, 40.0),
            b_points: 81,
            refinements: 1000,
            max_scale: 4.0,
            seed: 0,
        }
    }
}

fn axis(range: (f64, f64), points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    let step = (range.1 - range.0) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                range.1
            } else {
                range.0 + i as f64 * step
            }
        })
        .collect()
}

fn check_range(name: &str, range: (f64, f64), points: usize) -> Result<()> {
    if points == 0 || !(range.0.is_finite() && range.1.is_finite()) || range.0 > range.1 {
        return Err(Error::invalid(format!(
            "{name} search range is empty or non-finite"
        )));
    }
    Ok(())
}

fn ridge_integral(atoms: &[PushAtom], psi: &SquashingFn, w: &[f64], b: f64) -> f64 {
    atoms
        .iter()
        .map(|a| {
            let p: f64 = w.iter().zip(&a.position).map(|(x, y)| x * y).sum();
            a.weight * psi.apply(p + b)
        })
        .sum()
}

/// Maximizes `|∫ Ψ(w·t + b) dν(t)|` over the configured search.
/// Returns value 0 (at `w = 0`, `b = 0`) for the zero measure.
pub fn discriminate(
    nu: &PushforwardMeasure,
    psi: &SquashingFn,
    search: &DiscriminatorSearch,
) -> Result<Witness> {
    check_range("w", search.w_range, search.w_points)?;
    check_range("b", search.b_range, search.b_points)?;
    if search.max_scale.is_nan() || search.max_scale < 1.0 {
        return Err(Error::invalid("max_scale must be >= 1"));
    }
    psi.validate_params()?;
    let m = nu.dim();
    let nu = nu.merge();
    let atoms = nu.atoms();
    let mut best = Witness {
        w: vec![0.0; m],
        b: 0.0,
        value: 0.0,
    };
    if atoms.is_empty() {
        return Ok(best);
    }

    let w_axis = axis(search.w_range, search.w_points);
    let b_axis = axis(search.b_range, search.b_points);
    let lattice = search
        .w_points
        .checked_pow(m as u32)
        .ok_or_else(|| Error::invalid("w lattice too large"))?;
    let mut w = vec![0.0; m];
    let mut proj = vec![0.0; atoms.len()];
    for mut idx in 0..lattice {
        for j in (0..m).rev() {
            w[j] = w_axis[idx % search.w_points];
            idx /= search.w_points;
        }
        for (p, a) in proj.iter_mut().zip(atoms) {
            *p = w.iter().zip(&a.position).map(|(x, y)| x * y).sum();
        }
        for &b in &b_axis {
            let v: f64 = proj
                .iter()
                .zip(atoms)
                .map(|(p, a)| a.weight * psi.apply(p + b))
                .sum();
            if v.abs() > best.value.abs() {
                best = Witness {
                    w: w.clone(),
                    b,
                    value: v,
                };
            }
        }
    }

    let w_step = if search.w_points > 1 {
        (search.w_range.1 - search.w_range.0) / (search.w_points - 1) as f64
    } else {
        1.0
    };
    let w_reach = search.max_scale * search.w_range.0.abs().max(search.w_range.1.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    const MAX_MIDPOINTS: usize = 32;
    for _ in 0..search.refinements {
        let w: Vec<f64> = match rng.gen_range(0..3u8) {
            0 => best
                .w
                .iter()
                .map(|x| x + w_step * rng.gen_range(-1.0..1.0))
                .collect(),
            1 => {
                let s = search.max_scale.powf(rng.gen_range(0.0..1.0));
                best.w.iter().map(|x| x * s).collect()
            }
            _ => (0..m).map(|_| rng.gen_range(-w_reach..=w_reach)).collect(),
        };
        let mut proj: Vec<f64> = atoms
            .iter()
            .map(|a| w.iter().zip(&a.position).map(|(x, y)| x * y).sum())
            .collect();
        proj.sort_by(f64::total_cmp);
        proj.dedup();
        let mids = proj.len().saturating_sub(1);
        let mut biases: Vec<f64> = if mids <= MAX_MIDPOINTS {
            (0..mids).map(|k| -0.5 * (proj[k] + proj[k + 1])).collect()
        } else {
            (0..MAX_MIDPOINTS)
                .map(|_| {
                    let k = rng.gen_range(0..mids);
                    -0.5 * (proj[k] + proj[k + 1])
                })
                .collect()
        };
        biases.push(rng.gen_range(search.b_range.0..=search.b_range.1));
        for b in biases {
            let v = ridge_integral(atoms, psi, &w, b);
            if v.abs() > best.value.abs() {
                best = Witness {
                    w: w.clone(),
                    b,
                    value: v,
                };
            }
        }
    }
    best.value = ridge_integral(atoms, psi, &best.w, best.b);
    Ok(best)
}

/// Sampling of the ridge family `x ↦ Ψ(f(x) + b)` used by [`annihilation_residual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnihilationConfig {
    pub functionals: usize,
    pub scale: f64,
    pub bias_range: (f64, f64),
    pub bias_points: usize,
    pub seed: u64,
}

impl Default for AnnihilationConfig {
    fn default() -> Self {
        AnnihilationConfig {
            functionals: 64,
            scale: 10.0,
            bias_range: (-40.0, 40.0),
            bias_points: 161,
            seed: 0,
        }
    }
}

/// `max_{f, b} |∫ Ψ(f(x) + b) dμ(x)|` over sampled functionals and a bias grid.
pub fn annihilation_residual(
    mu: &AtomicSignedMeasure,
    psi: &SquashingFn,
    cfg: &AnnihilationConfig,
) -> Result<f64> {
    check_range("bias", cfg.bias_range, cfg.bias_points)?;
    psi.validate_params()?;
    let mu = mu.merged();
    let fs = sample_functionals(mu.space(), cfg.functionals, cfg.scale, cfg.seed)?;
    if mu.atoms().is_empty() {
        return Ok(0.0);
    }
    let biases = axis(cfg.bias_range, cfg.bias_points);
    let mut residual = 0.0f64;
    for f in &fs {
        let proj: Vec<f64> = mu
            .atoms()
            .iter()
            .map(|a| f.apply(a.point.coords()))
            .collect();
        for &b in &biases {
            let v: f64 = proj
                .iter()
                .zip(mu.atoms())
                .map(|(p, a)| a.weight * psi.apply(p + b))
                .sum();
            residual = residual.max(v.abs());
        }
    }
    Ok(residual)
}

/// Clamps each value to `[-n, n]`, the bounded truncation `f_N`.
pub fn truncate(values: &[f64], n: f64) -> Result<Vec<f64>> {
    if n.is_nan() || n <= 0.0 {
        return Err(Error::invalid("truncation level must be positive"));
    }
    Ok(values
        .iter()
        .map(|v| if v.abs() > n { n.copysign(*v) } else { *v })
        .collect())
}
