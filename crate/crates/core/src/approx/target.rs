use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::spaces::{Functional, FunctionalSpec, SpaceKind, SpacePoint};
use crate::Evaluate;

/// Serializable description of a real function on a space, built from
/// functionals with arithmetic, `sin`/`cos`/`exp`, integer powers, a
/// Heaviside step, and embedded networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetExpr {
    Const(f64),
    Functional(FunctionalSpec),
    Sum(Vec<TargetExpr>),
    Product(Vec<TargetExpr>),
    Pow {
        base: Box<TargetExpr>,
        exponent: i32,
    },
    Sin(Box<TargetExpr>),
    Cos(Box<TargetExpr>),
    Exp(Box<TargetExpr>),
    /// 1 where `arg ≥ threshold`, else 0. Makes the target discontinuous.
    Step {
        arg: Box<TargetExpr>,
        threshold: f64,
    },
    Network(Network),
}

impl TargetExpr {
    pub fn functional(spec: FunctionalSpec) -> Self {
        TargetExpr::Functional(spec)
    }

    pub fn coordinate(i: usize) -> Self {
        TargetExpr::Functional(FunctionalSpec::Coordinate(i))
    }

    pub fn scaled(factor: f64, x: TargetExpr) -> Self {
        TargetExpr::Product(vec![TargetExpr::Const(factor), x])
    }

    pub fn sin(x: TargetExpr) -> Self {
        TargetExpr::Sin(Box::new(x))
    }

    pub fn cos(x: TargetExpr) -> Self {
        TargetExpr::Cos(Box::new(x))
    }

    pub fn exp(x: TargetExpr) -> Self {
        TargetExpr::Exp(Box::new(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Functional(Functional),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Pow(Box<Node>, i32),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Step(Box<Node>, f64),
    Network(Network),
}

impl Node {
    fn resolve(kind: SpaceKind, e: &TargetExpr) -> Result<Node> {
        let boxed = |x: &TargetExpr| Node::resolve(kind, x).map(Box::new);
        Ok(match e {
            TargetExpr::Const(c) => {
                if !c.is_finite() {
                    return Err(Error::NonFinite("target constant"));
                }
                Node::Const(*c)
            }
            TargetExpr::Functional(spec) => Node::Functional(spec.resolve(kind)?),
            TargetExpr::Sum(xs) => Node::Sum(
                xs.iter()
                    .map(|x| Node::resolve(kind, x))
                    .collect::<Result<_>>()?,
            ),
            TargetExpr::Product(xs) => Node::Product(
                xs.iter()
                    .map(|x| Node::resolve(kind, x))
                    .collect::<Result<_>>()?,
            ),
            TargetExpr::Pow { base, exponent } => Node::Pow(boxed(base)?, *exponent),
            TargetExpr::Sin(x) => Node::Sin(boxed(x)?),
            TargetExpr::Cos(x) => Node::Cos(boxed(x)?),
            TargetExpr::Exp(x) => Node::Exp(boxed(x)?),
            TargetExpr::Step { arg, threshold } => Node::Step(boxed(arg)?, *threshold),
            TargetExpr::Network(n) => {
                kind.ensure_same(&n.kind())?;
                Node::Network(n.clone())
            }
        })
    }

    fn eval(&self, coords: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Functional(f) => f.apply(coords),
            Node::Sum(xs) => xs.iter().map(|x| x.eval(coords)).sum(),
            Node::Product(xs) => xs.iter().map(|x| x.eval(coords)).product(),
            Node::Pow(x, e) => x.eval(coords).powi(*e),
            Node::Sin(x) => x.eval(coords).sin(),
            Node::Cos(x) => x.eval(coords).cos(),
            Node::Exp(x) => x.eval(coords).exp(),
            Node::Step(x, t) => {
                if x.eval(coords) >= *t {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Network(n) => n.apply(coords),
        }
    }

    fn has_step(&self) -> bool {
        match self {
            Node::Step(..) => true,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().any(Node::has_step),
            Node::Pow(x, _) | Node::Sin(x) | Node::Cos(x) | Node::Exp(x) => x.has_step(),
            Node::Const(_) | Node::Functional(_) | Node::Network(_) => false,
        }
    }
}

/// A [`TargetExpr`] resolved against a space kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    kind: SpaceKind,
    expr: TargetExpr,
    node: Node,
}

impl Target {
    pub fn new(kind: SpaceKind, expr: TargetExpr) -> Result<Self> {
        let node = Node::resolve(kind, &expr)?;
        Ok(Target { kind, expr, node })
    }

    pub fn from_network(net: Network) -> Self {
        let kind = net.kind();
        Target {
            kind,
            expr: TargetExpr::Network(net.clone()),
            node: Node::Network(net),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn expr(&self) -> &TargetExpr {
        &self.expr
    }

    pub fn is_continuous(&self) -> bool {
        !self.node.has_step()
    }

    pub fn eval(&self, x: &SpacePoint) -> Result<f64> {
        self.kind.ensure_same(&x.kind())?;
        let v = self.node.eval(x.coords());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("target value"))
        }
    }

    pub fn values(&self, points: &[SpacePoint]) -> Result<Vec<f64>> {
        points.iter().map(|p| self.eval(p)).collect()
    }
}

impl Evaluate for Target {
    fn evaluate(&self, x: &SpacePoint) -> Result<f64> {
        self.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R2: SpaceKind = SpaceKind::Euclidean { dim: 2 };

    #[test]
    fn evaluates_compositions() {
        let t = Target::new(
            R2,
            TargetExpr::Sum(vec![
                TargetExpr::sin(TargetExpr::coordinate(0)),
                TargetExpr::Product(vec![TargetExpr::coordinate(0), TargetExpr::coordinate(1)]),
                TargetExpr::Pow {
                    base: Box::new(TargetExpr::coordinate(1)),
                    exponent: 2,
                },
            ]),
        )
        .unwrap();
        let x = SpacePoint::new(R2, vec![0.5, 2.0]).unwrap();
        assert_eq!(t.eval(&x).unwrap(), 0.5f64.sin() + 1.0 + 4.0);
        assert!(t.is_continuous());
    }

    #[test]
    fn steps_mark_discontinuity() {
        let t = Target::new(
            R2,
            TargetExpr::Step {
                arg: Box::new(TargetExpr::coordinate(0)),
                threshold: 0.5,
            },
        )
        .unwrap();
        assert!(!t.is_continuous());
        assert_eq!(
            t.eval(&SpacePoint::new(R2, vec![0.5, 0.0]).unwrap())
                .unwrap(),
            1.0
        );
        assert_eq!(
            t.eval(&SpacePoint::new(R2, vec![0.49, 0.0]).unwrap())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn resolution_errors() {
        assert!(Target::new(R2, TargetExpr::coordinate(2)).is_err());
        let t = Target::new(
            R2,
            TargetExpr::exp(TargetExpr::scaled(1000.0, TargetExpr::coordinate(0))),
        )
        .unwrap();
        assert!(t
            .eval(&SpacePoint::new(R2, vec![1.0, 0.0]).unwrap())
            .is_err());
        assert!(t
            .eval(&SpacePoint::zero(SpaceKind::Euclidean { dim: 3 }))
            .is_err());
    }
}
