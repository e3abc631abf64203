//! Concrete vector spaces with point-separating duals.
//!
//! Every point and functional carries the [`SpaceKind`] it belongs to, and
//! any operation mixing kinds is rejected with [`Error::KindMismatch`].

mod compact;
mod expr;
mod functional;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use compact::{Anchor, CompactSet, ParamMap};
pub use expr::{ExprContext, ScalarExpr};
pub use functional::{
    canonical_family, sample_functionals, separation_witness, Functional, FunctionalSpec, GridRule,
};

/// Default decay exponent of the sequence kind.
pub const DEFAULT_DECAY: f64 = 1.5;

fn default_decay() -> f64 {
    DEFAULT_DECAY
}

/// The finite-parameter realization of a space `X`.
///
/// * `Euclidean { dim }`: `ℝⁿ` with the dot-product dual.
/// * `Sequence { len, decay }`: sequences truncated to `len` slots. Sampled
///   functionals weight slot `i` (1-based) by `i^(-decay)`.
/// * `GridFunction { nodes }`: continuous functions on `[0, 1]` stored by
///   their samples at `t_i = i / (nodes - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceKind {
    Euclidean {
        dim: usize,
    },
    Sequence {
        len: usize,
        #[serde(default = "default_decay")]
        decay: f64,
    },
    GridFunction {
        nodes: usize,
    },
}

impl SpaceKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceKind::Euclidean { dim } if dim < 1 => {
                Err(Error::invalid("euclidean dim must be >= 1"))
            }
            SpaceKind::Sequence { len, .. } if len < 1 => {
                Err(Error::invalid("sequence len must be >= 1"))
            }
            SpaceKind::Sequence { decay, .. } if !decay.is_finite() => {
                Err(Error::NonFinite("sequence decay"))
            }
            SpaceKind::GridFunction { nodes } if nodes < 2 => {
                Err(Error::invalid("grid nodes must be >= 2"))
            }
            _ => Ok(()),
        }
    }

    /// Number of stored coordinates.
    pub fn dimension(&self) -> usize {
        match *self {
            SpaceKind::Euclidean { dim } => dim,
            SpaceKind::Sequence { len, .. } => len,
            SpaceKind::GridFunction { nodes } => nodes,
        }
    }

    /// Node position associated with coordinate `i`: the grid node for the
    /// function kind, and `i / (dim - 1)` (or 0 for a single slot) otherwise.
    pub fn node(&self, i: usize) -> f64 {
        let n = self.dimension();
        if n <= 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, SpaceKind::GridFunction { .. })
    }

    pub(crate) fn ensure_same(&self, other: &SpaceKind) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected: *self,
                found: *other,
            })
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Euclidean { dim } => write!(f, "Euclidean({dim})"),
            SpaceKind::Sequence { len, decay } => write!(f, "Sequence(L={len}, s={decay})"),
            SpaceKind::GridFunction { nodes } => write!(f, "GridFunction(G={nodes})"),
        }
    }
}

/// Trapezoid weights for `nodes` uniform nodes on `[0, 1]`.
pub fn trapezoid_weights(nodes: usize) -> Vec<f64> {
    let h = 1.0 / (nodes - 1) as f64;
    let mut w = vec![h; nodes];
    w[0] = 0.5 * h;
    w[nodes - 1] = 0.5 * h;
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceInstanceDesc", into = "SpaceInstanceDesc")]
pub struct SpaceInstance {
    kind: SpaceKind,
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceInstanceDesc {
    kind: SpaceKind,
    #[serde(default)]
    name: String,
}

impl TryFrom<SpaceInstanceDesc> for SpaceInstance {
    type Error = Error;

    fn try_from(d: SpaceInstanceDesc) -> Result<Self> {
        SpaceInstance::new(d.kind, d.name)
    }
}

impl From<SpaceInstance> for SpaceInstanceDesc {
    fn from(s: SpaceInstance) -> Self {
        SpaceInstanceDesc {
            kind: s.kind,
            name: s.name,
        }
    }
}

impl SpaceInstance {
    pub fn new(kind: SpaceKind, name: impl Into<String>) -> Result<Self> {
        kind.validate()?;
        let mut name = name.into();
        if name.is_empty() {
            name = kind.to_string();
        }
        Ok(SpaceInstance { kind, name })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(SpaceKind::Euclidean { dim }, "")
    }

    pub fn sequence(len: usize, decay: f64) -> Result<Self> {
        Self::new(SpaceKind::Sequence { len, decay }, "")
    }

    pub fn grid_function(nodes: usize) -> Result<Self> {
        Self::new(SpaceKind::GridFunction { nodes }, "")
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// A point of a space: its coordinates (or grid samples).
#[derive(Debug, Clone, PartialEq)]
pub struct SpacePoint {
    kind: SpaceKind,
    coords: Vec<f64>,
}

impl SpacePoint {
    pub fn new(kind: SpaceKind, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != kind.dimension() {
            return Err(Error::LengthMismatch {
                context: "point coordinates",
                expected: kind.dimension(),
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(SpacePoint { kind, coords })
    }

    /// Samples `g` at the grid nodes of a function-kind space.
    pub fn from_fn(kind: SpaceKind, g: impl Fn(f64) -> f64) -> Result<Self> {
        let coords = (0..kind.dimension()).map(|i| g(kind.node(i))).collect();
        Self::new(kind, coords)
    }

    pub fn zero(kind: SpaceKind) -> Self {
        SpacePoint {
            kind,
            coords: vec![0.0; kind.dimension()],
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &SpacePoint, beta: f64) -> Result<SpacePoint> {
        self.kind.ensure_same(&other.kind)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        SpacePoint::new(self.kind, coords)
    }

    /// Largest absolute coordinate.
    pub fn sup_norm(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}
