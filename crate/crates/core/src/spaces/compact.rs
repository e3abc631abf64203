use serde::{Deserialize, Serialize};

use super::{ExprContext, ScalarExpr, SpaceInstance, SpaceKind, SpacePoint};
use crate::error::{Error, Result};

/// A fixed point of the space: explicit coordinates, or a formula of
/// `node` / `index` evaluated slot by slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Anchor {
    Values(Vec<f64>),
    Formula(ScalarExpr),
}

impl Anchor {
    fn resolve(&self, kind: SpaceKind) -> Result<Vec<f64>> {
        let coords = match self {
            Anchor::Values(v) => v.clone(),
            Anchor::Formula(e) => {
                if e.max_param().is_some() {
                    return Err(Error::invalid(
                        "anchor formulas cannot reference parameters",
                    ));
                }
                (0..kind.dimension())
                    .map(|i| e.eval(&slot_context(kind, i, &[])))
                    .collect()
            }
        };
        Ok(SpacePoint::new(kind, coords)?.coords().to_vec())
    }
}

fn slot_context(kind: SpaceKind, i: usize, params: &[f64]) -> ExprContext<'_> {
    ExprContext {
        params,
        node: kind.node(i),
        index: (i + 1) as f64,
    }
}

/// The parametric map `φ: [0,1]^d → X` whose image is the compact set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamMap {
    Constant(Anchor),
    /// `offset + Σ_j u_j · directions[j]`; one direction per parameter.
    Affine {
        offset: Anchor,
        directions: Vec<Anchor>,
    },
    /// One expression, evaluated per coordinate with `node`/`index` bound.
    Coordinatewise(ScalarExpr),
    /// One expression per coordinate.
    Components(Vec<ScalarExpr>),
    /// Multilinear convex combination of `2^d` corner anchors. Bit `j` of
    /// the anchor index selects `u_j` (set) or `1 - u_j` (clear).
    Multilinear(Vec<Anchor>),
}

#[derive(Debug, Clone, PartialEq)]
enum Resolved {
    Constant(Vec<f64>),
    Affine {
        offset: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
    Coordinatewise(ScalarExpr),
    Components(Vec<ScalarExpr>),
    Multilinear(Vec<Vec<f64>>),
}

/// A compact subset given as the continuous image of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompactSetDesc", into = "CompactSetDesc")]
pub struct CompactSet {
    space: SpaceInstance,
    dim: usize,
    map: ParamMap,
    resolved: Resolved,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompactSetDesc {
    space: SpaceInstance,
    dim: usize,
    map: ParamMap,
}

impl TryFrom<CompactSetDesc> for CompactSet {
    type Error = Error;

    fn try_from(d: CompactSetDesc) -> Result<Self> {
        CompactSet::new(d.space, d.dim, d.map)
    }
}

impl From<CompactSet> for CompactSetDesc {
    fn from(c: CompactSet) -> Self {
        CompactSetDesc {
            space: c.space,
            dim: c.dim,
            map: c.map,
        }
    }
}

impl CompactSet {
    pub fn new(space: SpaceInstance, dim: usize, map: ParamMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "compact set parameter dimension must be >= 1",
            ));
        }
        let kind = space.kind();
        let n = kind.dimension();
        let check_params = |e: &ScalarExpr| match e.max_param() {
            Some(j) if j >= dim => Err(Error::invalid(format!(
                "parameter {j} referenced but the set has dimension {dim}"
            ))),
            _ => Ok(()),
        };
        let resolved = match &map {
            ParamMap::Constant(a) => Resolved::Constant(a.resolve(kind)?),
            ParamMap::Affine { offset, directions } => {
                if directions.len() != dim {
                    return Err(Error::LengthMismatch {
                        context: "affine directions",
                        expected: dim,
                        found: directions.len(),
                    });
                }
                Resolved::Affine {
                    offset: offset.resolve(kind)?,
                    directions: directions
                        .iter()
                        .map(|d| d.resolve(kind))
                        .collect::<Result<_>>()?,
                }
            }
            ParamMap::Coordinatewise(e) => {
                check_params(e)?;
                Resolved::Coordinatewise(e.clone())
            }
            ParamMap::Components(es) => {
                if es.len() != n {
                    return Err(Error::LengthMismatch {
                        context: "component expressions",
                        expected: n,
                        found: es.len(),
                    });
                }
                es.iter().try_for_each(check_params)?;
                Resolved::Components(es.clone())
            }
            ParamMap::Multilinear(anchors) => {
                let corners = 1usize
                    .checked_shl(dim as u32)
                    .ok_or_else(|| Error::invalid("too many parameters for multilinear map"))?;
                if anchors.len() != corners {
                    return Err(Error::LengthMismatch {
                        context: "multilinear anchors",
                        expected: corners,
                        found: anchors.len(),
                    });
                }
                Resolved::Multilinear(
                    anchors
                        .iter()
                        .map(|a| a.resolve(kind))
                        .collect::<Result<_>>()?,
                )
            }
        };
        Ok(CompactSet {
            space,
            dim,
            map,
            resolved,
        })
    }

    pub fn space(&self) -> &SpaceInstance {
        &self.space
    }

    pub fn kind(&self) -> SpaceKind {
        self.space.kind()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self) -> &ParamMap {
        &self.map
    }

    /// `φ(u)`.
    pub fn point_at(&self, u: &[f64]) -> Result<SpacePoint> {
        if u.len() != self.dim {
            return Err(Error::LengthMismatch {
                context: "compact set parameters",
                expected: self.dim,
                found: u.len(),
            });
        }
        let kind = self.kind();
        let n = kind.dimension();
        let coords = match &self.resolved {
            Resolved::Constant(x) => x.clone(),
            Resolved::Affine { offset, directions } => {
                let mut x = offset.clone();
                for (uj, d) in u.iter().zip(directions) {
                    for (xi, di) in x.iter_mut().zip(d) {
                        *xi += uj * di;
                    }
                }
                x
            }
            Resolved::Coordinatewise(e) => {
                (0..n).map(|i| e.eval(&slot_context(kind, i, u))).collect()
            }
            Resolved::Components(es) => es
                .iter()
                .enumerate()
                .map(|(i, e)| e.eval(&slot_context(kind, i, u)))
                .collect(),
            Resolved::Multilinear(anchors) => {
                let mut x = vec![0.0; n];
                for (c, a) in anchors.iter().enumerate() {
                    let w: f64 = u
                        .iter()
                        .enumerate()
                        .map(|(j, uj)| if c >> j & 1 == 1 { *uj } else { 1.0 - uj })
                        .product();
                    for (xi, ai) in x.iter_mut().zip(a) {
                        *xi += w * ai;
                    }
                }
                x
            }
        };
        SpacePoint::new(kind, coords)
    }

    /// `φ` on the uniform lattice with `resolution` points per axis
    /// (`k / (resolution - 1)`; a single point at 0 when `resolution == 1`).
    /// Lattice order is row-major with the last parameter varying fastest.
    pub fn net(&self, resolution: usize) -> Result<Vec<SpacePoint>> {
        if resolution == 0 {
            return Err(Error::invalid("net resolution must be >= 1"));
        }
        let total = resolution
            .checked_pow(self.dim as u32)
            .ok_or_else(|| Error::invalid("net size overflows"))?;
        let axis: Vec<f64> = (0..resolution)
            .map(|k| {
                if resolution == 1 {
                    0.0
                } else {
                    k as f64 / (resolution - 1) as f64
                }
            })
            .collect();
        let mut u = vec![0.0; self.dim];
        (0..total)
            .map(|mut idx| {
                for j in (0..self.dim).rev() {
                    u[j] = axis[idx % resolution];
                    idx /= resolution;
                }
                self.point_at(&u)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

    fn circle() -> CompactSet {
        let s = ScalarExpr::scaled(TAU, ScalarExpr::param(0));
        CompactSet::new(
            SpaceInstance::euclidean(2).unwrap(),
            1,
            ParamMap::Components(vec![ScalarExpr::cos(s.clone()), ScalarExpr::sin(s)]),
        )
        .unwrap()
    }

    #[test]
    fn circle_net_uses_uniform_lattice() {
        let net = circle().net(4).unwrap();
        assert_eq!(net.len(), 4);
        for (p, s) in net.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]) {
            assert_eq!(p.coords(), &[(TAU * s).cos(), (TAU * s).sin()]);
        }
    }

    #[test]
    fn net_counts_and_order() {
        let k = CompactSet::new(
            SpaceInstance::euclidean(2).unwrap(),
            2,
            ParamMap::Affine {
                offset: Anchor::Values(vec![0.0, 0.0]),
                directions: vec![
                    Anchor::Values(vec![1.0, 0.0]),
                    Anchor::Values(vec![0.0, 1.0]),
                ],
            },
        )
        .unwrap();
        let net = k.net(3).unwrap();
        assert_eq!(net.len(), 9);
        assert_eq!(net[1].coords(), &[0.0, 0.5]);
        assert_eq!(net[3].coords(), &[0.5, 0.0]);
        assert!(k.net(0).is_err());
        assert_eq!(k.net(1).unwrap().len(), 1);
    }

    #[test]
    fn constant_map_image() {
        let x0 = vec![1.5, -2.0, 0.25];
        let k = CompactSet::new(
            SpaceInstance::euclidean(3).unwrap(),
            2,
            ParamMap::Constant(Anchor::Values(x0.clone())),
        )
        .unwrap();
        assert!(k.net(5).unwrap().iter().all(|p| p.coords() == x0));
    }

    #[test]
    fn multilinear_corners() {
        let k = CompactSet::new(
            SpaceInstance::grid_function(5).unwrap(),
            1,
            ParamMap::Multilinear(vec![
                Anchor::Formula(ScalarExpr::Node),
                Anchor::Formula(ScalarExpr::Const(1.0)),
            ]),
        )
        .unwrap();
        let net = k.net(3).unwrap();
        assert_eq!(net[0].coords(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(net[2].coords(), &[1.0; 5]);
        assert_eq!(net[1].coords(), &[0.5, 0.625, 0.75, 0.875, 1.0]);
    }

    #[test]
    fn rejects_bad_descriptions() {
        let r2 = SpaceInstance::euclidean(2).unwrap();
        assert!(CompactSet::new(
            r2.clone(),
            1,
            ParamMap::Components(vec![ScalarExpr::param(1), ScalarExpr::Node])
        )
        .is_err());
        assert!(
            CompactSet::new(r2.clone(), 1, ParamMap::Components(vec![ScalarExpr::Node])).is_err()
        );
        assert!(CompactSet::new(
            r2.clone(),
            2,
            ParamMap::Multilinear(vec![Anchor::Values(vec![0.0, 0.0]); 2])
        )
        .is_err());
        assert!(CompactSet::new(
            r2.clone(),
            0,
            ParamMap::Constant(Anchor::Values(vec![0.0, 0.0]))
        )
        .is_err());
        // Negative base with fractional exponent yields NaN at net time.
        let k = CompactSet::new(
            r2,
            1,
            ParamMap::Components(vec![
                ScalarExpr::pow(ScalarExpr::Const(-1.0), 0.5),
                ScalarExpr::Node,
            ]),
        )
        .unwrap();
        assert!(matches!(k.net(2), Err(Error::NonFinite(_))));
    }

    #[test]
    fn net_is_reproducible_through_json() {
        let k = circle();
        let json = serde_json::to_string(&k).unwrap();
        let back: CompactSet = serde_json::from_str(&json).unwrap();
        let a = k.net(17).unwrap();
        let b = back.net(17).unwrap();
        let bits = |v: &[SpacePoint]| -> Vec<u64> {
            v.iter()
                .flat_map(|p| p.coords().iter().map(|c| c.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
