use serde::{Deserialize, Serialize};

/// Real-valued expressions over compact-set parameters and coordinate position.
///
/// `Param(j)` is the `j`-th lattice parameter in `[0, 1]`, `Node` the node
/// position of the coordinate being produced (see [`super::SpaceKind::node`]),
/// and `Index` its 1-based slot number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarExpr {
    Const(f64),
    Param(usize),
    Node,
    Index,
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow {
        base: Box<ScalarExpr>,
        exponent: f64,
    },
    Sin(Box<ScalarExpr>),
    Cos(Box<ScalarExpr>),
    Exp(Box<ScalarExpr>),
}

#[derive(Debug, Clone, Copy)]
pub struct ExprContext<'a> {
    pub params: &'a [f64],
    pub node: f64,
    pub index: f64,
}

impl ScalarExpr {
    pub fn eval(&self, ctx: &ExprContext<'_>) -> f64 {
        match self {
            ScalarExpr::Const(c) => *c,
            ScalarExpr::Param(j) => ctx.params[*j],
            ScalarExpr::Node => ctx.node,
            ScalarExpr::Index => ctx.index,
            ScalarExpr::Sum(xs) => xs.iter().map(|x| x.eval(ctx)).sum(),
            ScalarExpr::Product(xs) => xs.iter().map(|x| x.eval(ctx)).product(),
            ScalarExpr::Pow { base, exponent } => {
                let b = base.eval(ctx);
                if exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64 {
                    b.powi(*exponent as i32)
                } else {
                    b.powf(*exponent)
                }
            }
            ScalarExpr::Sin(x) => x.eval(ctx).sin(),
            ScalarExpr::Cos(x) => x.eval(ctx).cos(),
            ScalarExpr::Exp(x) => x.eval(ctx).exp(),
        }
    }

    /// Largest parameter index referenced, if any.
    pub fn max_param(&self) -> Option<usize> {
        match self {
            ScalarExpr::Param(j) => Some(*j),
            ScalarExpr::Const(_) | ScalarExpr::Node | ScalarExpr::Index => None,
            ScalarExpr::Sum(xs) | ScalarExpr::Product(xs) => {
                xs.iter().filter_map(|x| x.max_param()).max()
            }
            ScalarExpr::Pow { base, .. } => base.max_param(),
            ScalarExpr::Sin(x) | ScalarExpr::Cos(x) | ScalarExpr::Exp(x) => x.max_param(),
        }
    }

    // Small builders, mostly for tests and bundled fixtures.

    pub fn param(j: usize) -> Self {
        ScalarExpr::Param(j)
    }

    pub fn scaled(factor: f64, x: ScalarExpr) -> Self {
        ScalarExpr::Product(vec![ScalarExpr::Const(factor), x])
    }

    pub fn sin(x: ScalarExpr) -> Self {
        ScalarExpr::Sin(Box::new(x))
    }

    pub fn cos(x: ScalarExpr) -> Self {
        ScalarExpr::Cos(Box::new(x))
    }

    pub fn pow(base: ScalarExpr, exponent: f64) -> Self {
        ScalarExpr::Pow {
            base: Box::new(base),
            exponent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_composites() {
        let e = ScalarExpr::Sum(vec![
            ScalarExpr::scaled(2.0, ScalarExpr::param(0)),
            ScalarExpr::pow(ScalarExpr::Index, -1.5),
            ScalarExpr::Node,
        ]);
        let ctx = ExprContext {
            params: &[0.25],
            node: 0.5,
            index: 4.0,
        };
        assert_eq!(e.eval(&ctx), 0.5 + 0.125 + 0.5);
        assert_eq!(e.max_param(), Some(0));
        assert_eq!(ScalarExpr::Node.max_param(), None);
    }

    #[test]
    fn json_shape() {
        let e: ScalarExpr =
            serde_json::from_str(r#"{"sin": {"product": [{"const": 2.0}, {"param": 1}]}}"#)
                .unwrap();
        assert_eq!(
            e,
            ScalarExpr::sin(ScalarExpr::scaled(2.0, ScalarExpr::param(1)))
        );
        let unit: ScalarExpr = serde_json::from_str(r#""node""#).unwrap();
        assert_eq!(unit, ScalarExpr::Node);
    }
}
