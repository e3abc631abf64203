//! Polynomials in finitely many functionals, `P(g_1(x), …, g_k(x))`, and a
//! least-squares fit over all monomials up to a total degree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_least_squares, DenseMatrix};
use crate::spaces::{Functional, SpaceKind, SpacePoint};
use crate::Evaluate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: f64,
    /// One exponent per generator.
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementDesc", into = "ElementDesc")]
pub struct AlgebraElement {
    space: SpaceKind,
    generators: Vec<Functional>,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementDesc {
    space: SpaceKind,
    generators: Vec<Functional>,
    terms: Vec<Term>,
}

impl TryFrom<ElementDesc> for AlgebraElement {
    type Error = Error;

    fn try_from(d: ElementDesc) -> Result<Self> {
        AlgebraElement::new(d.space, d.generators, d.terms)
    }
}

impl From<AlgebraElement> for ElementDesc {
    fn from(e: AlgebraElement) -> Self {
        ElementDesc {
            space: e.space,
            generators: e.generators,
            terms: e.terms,
        }
    }
}

impl AlgebraElement {
    pub fn new(space: SpaceKind, generators: Vec<Functional>, terms: Vec<Term>) -> Result<Self> {
        for g in &generators {
            space.ensure_same(&g.kind())?;
        }
        if terms.is_empty() {
            return Err(Error::Empty("algebra element terms"));
        }
        for t in &terms {
            if t.exponents.len() != generators.len() {
                return Err(Error::LengthMismatch {
                    context: "term exponents",
                    expected: generators.len(),
                    found: t.exponents.len(),
                });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::NonFinite("term coefficient"));
            }
        }
        Ok(AlgebraElement {
            space,
            generators,
            terms,
        })
    }

    pub fn constant(space: SpaceKind, generators: Vec<Functional>, value: f64) -> Result<Self> {
        let k = generators.len();
        Self::new(
            space,
            generators,
            vec![Term {
                coefficient: value,
                exponents: vec![0; k],
            }],
        )
    }

    /// The restriction `g_i` itself.
    pub fn generator(space: SpaceKind, generators: Vec<Functional>, i: usize) -> Result<Self> {
        let k = generators.len();
        if i >= k {
            return Err(Error::invalid(format!("generator {i} out of range ({k})")));
        }
        let mut exponents = vec![0; k];
        exponents[i] = 1;
        Self::new(
            space,
            generators,
            vec![Term {
                coefficient: 1.0,
                exponents,
            }],
        )
    }

    pub fn space(&self) -> SpaceKind {
        self.space
    }

    pub fn generators(&self) -> &[Functional] {
        &self.generators
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &SpacePoint) -> Result<f64> {
        self.space.ensure_same(&x.kind())?;
        let g: Vec<f64> = self
            .generators
            .iter()
            .map(|f| f.apply(x.coords()))
            .collect();
        Ok(self
            .terms
            .iter()
            .map(|t| {
                t.coefficient
                    * t.exponents
                        .iter()
                        .zip(&g)
                        .map(|(e, v)| v.powi(*e as i32))
                        .product::<f64>()
            })
            .sum())
    }

    fn ensure_compatible(&self, other: &AlgebraElement) -> Result<()> {
        self.space.ensure_same(&other.space)?;
        if self.generators != other.generators {
            return Err(Error::invalid("algebra elements use different generators"));
        }
        Ok(())
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.ensure_compatible(other)?;
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::new(self.space, self.generators.clone(), terms)
    }

    /// Product, expanded term by term (no like-term collection).
    pub fn mul(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.ensure_compatible(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coefficient: a.coefficient * b.coefficient,
                    exponents: a
                        .exponents
                        .iter()
                        .zip(&b.exponents)
                        .map(|(x, y)| x + y)
                        .collect(),
                });
            }
        }
        Self::new(self.space, self.generators.clone(), terms)
    }
}

impl Evaluate for AlgebraElement {
    fn evaluate(&self, x: &SpacePoint) -> Result<f64> {
        self.eval(x)
    }
}

/// Exponent vectors of all monomials in `k` variables with total degree
/// `≤ degree`, ordered by total degree and then lexicographically descending.
pub fn monomial_exponents(k: usize, degree: u32) -> Vec<Vec<u32>> {
    fn compositions(k: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == k {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(k, total - first, prefix, out);
            prefix.pop();
        }
    }
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        compositions(k, total, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub element: AlgebraElement,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub rms_residual: f64,
    pub rank: usize,
    pub columns: usize,
}

/// Least-squares fit (ridge `λ ≥ 0`) of `targets` over the monomials of total
/// degree `≤ degree` in `generators`, evaluated on `net`.
pub fn fit_polynomial_baseline(
    net: &[SpacePoint],
    targets: &[f64],
    generators: &[Functional],
    degree: u32,
    ridge: f64,
) -> Result<BaselineFit> {
    let first = net.first().ok_or(Error::Empty("baseline net"))?;
    if targets.len() != net.len() {
        return Err(Error::LengthMismatch {
            context: "baseline targets",
            expected: net.len(),
            found: targets.len(),
        });
    }
    let space = first.kind();
    for p in net {
        space.ensure_same(&p.kind())?;
    }
    for g in generators {
        space.ensure_same(&g.kind())?;
    }

    let monomials = monomial_exponents(generators.len(), degree);
    let gvals: Vec<Vec<f64>> = net
        .iter()
        .map(|p| generators.iter().map(|g| g.apply(p.coords())).collect())
        .collect();
    let design = DenseMatrix::from_fn(net.len(), monomials.len(), |r, c| {
        monomials[c]
            .iter()
            .zip(&gvals[r])
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    });
    let sol = solve_least_squares(&design, targets, ridge)?;
    let fitted = design.mul_vec(&sol.coefficients);
    let abs: Vec<f64> = fitted
        .iter()
        .zip(targets)
        .map(|(f, t)| (f - t).abs())
        .collect();
    let n = abs.len() as f64;

    let terms = monomials
        .into_iter()
        .zip(&sol.coefficients)
        .map(|(exponents, &coefficient)| Term {
            coefficient,
            exponents,
        })
        .collect();
    Ok(BaselineFit {
        element: AlgebraElement::new(space, generators.to_vec(), terms)?,
        max_residual: abs.iter().copied().fold(0.0, f64::max),
        mean_residual: abs.iter().sum::<f64>() / n,
        rms_residual: (abs.iter().map(|a| a * a).sum::<f64>() / n).sqrt(),
        rank: sol.rank,
        columns: design.cols(),
    })
}
