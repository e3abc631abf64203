//! Dense ridge-regularized least squares.
//!
//! `min ‖A c − y‖² + λ‖c‖²` is solved as an ordinary least-squares problem on
//! the augmented system `[A; √λ I] c ≈ [y; 0]` with Householder QR and column
//! pivoting. Rank is read off the pivoted `R` diagonal.

use crate::error::{Error, Result};

/// A column is treated as dependent when `|R_jj| ≤ PIVOT_TOLERANCE · |R_00|`.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds an `rows × cols` matrix from `entry(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[c * rows + r] = entry(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn column_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (c, xc) in x.iter().enumerate() {
            for (yr, a) in y.iter_mut().zip(self.column(c)) {
                *yr += a * xc;
            }
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Numerical rank of the (augmented) system.
    pub rank: usize,
}

pub fn solve_least_squares(a: &DenseMatrix, y: &[f64], ridge: f64) -> Result<LeastSquares> {
    if y.len() != a.rows {
        return Err(Error::LengthMismatch {
            context: "least-squares right-hand side",
            expected: a.rows,
            found: y.len(),
        });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("ridge must be finite and nonnegative"));
    }
    let k = a.cols;
    if k == 0 {
        return Ok(LeastSquares {
            coefficients: vec![],
            rank: 0,
        });
    }
    if a.data.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares system"));
    }

    let extra = if ridge > 0.0 { k } else { 0 };
    let m = a.rows + extra;
    let sqrt_ridge = ridge.sqrt();
    let mut q = DenseMatrix::from_fn(m, k, |r, c| {
        if r < a.rows {
            a.get(r, c)
        } else if r - a.rows == c {
            sqrt_ridge
        } else {
            0.0
        }
    });
    let mut b: Vec<f64> = y
        .iter()
        .copied()
        .chain(std::iter::repeat_n(0.0, extra))
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let steps = k.min(m);
    let mut diag = Vec::with_capacity(steps);
    let mut rank = 0;

    for j in 0..steps {
        // Pivot: remaining column with the largest trailing norm.
        let (best, best_norm) =
            (j..k)
                .map(|c| (c, norm(&q.column(c)[j..])))
                .fold(
                    (j, -1.0),
                    |acc, (c, n)| if n > acc.1 { (c, n) } else { acc },
                );
        if best != j {
            perm.swap(j, best);
            for r in 0..m {
                q.data.swap(j * m + r, best * m + r);
            }
        }
        let scale = diag.first().copied().unwrap_or(best_norm);
        if best_norm <= PIVOT_TOLERANCE * scale || best_norm == 0.0 {
            break;
        }

        let col = &mut q.column_mut(j)[j..];
        let alpha = if col[0] >= 0.0 { -best_norm } else { best_norm };
        col[0] -= alpha;
        let v: Vec<f64> = col.to_vec();
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        col.iter_mut().for_each(|x| *x = 0.0);
        col[0] = alpha;
        if vnorm2 > 0.0 {
            for c in j + 1..k {
                reflect(&mut q.column_mut(c)[j..], &v, vnorm2);
            }
            reflect(&mut b[j..], &v, vnorm2);
        }
        diag.push(alpha.abs());
        rank += 1;
    }

    if rank < k {
        return Err(Error::Degenerate { rank, columns: k });
    }

    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let s = (j + 1..k).fold(b[j], |s, c| s - q.get(j, c) * x[c]);
        x[j] = s / q.get(j, j);
    }
    let mut coefficients = vec![0.0; k];
    for (j, &p) in perm.iter().enumerate() {
        coefficients[p] = x[j];
    }
    Ok(LeastSquares { coefficients, rank })
}

fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(x: &mut [f64], v: &[f64], vnorm2: f64) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (a, b) in x.iter_mut().zip(v) {
        *a -= f * b;
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn exact_square_system() {
        let a = DenseMatrix::from_fn(2, 2, |r, c| [[2.0, 1.0], [1.0, 3.0]][r][c]);
        let sol = solve_least_squares(&a, &[3.0, 5.0], 0.0).unwrap();
        assert!((sol.coefficients[0] - 0.8).abs() < 1e-14);
        assert!((sol.coefficients[1] - 1.4).abs() < 1e-14);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn line_fit_matches_closed_form() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 1.0 + 2.0 * x + (7.0 * x).sin() * 0.1)
            .collect();
        let a = DenseMatrix::from_fn(20, 2, |r, c| if c == 0 { 1.0 } else { xs[r] });
        let sol = solve_least_squares(&a, &ys, 0.0).unwrap();
        let n = 20.0;
        let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        assert!((sol.coefficients[0] - icpt).abs() < 1e-12);
        assert!((sol.coefficients[1] - slope).abs() < 1e-12);
    }

    #[test]
    fn dependent_columns_are_signalled() {
        let a = DenseMatrix::from_fn(5, 3, |r, c| match c {
            0 => 1.0,
            1 => r as f64,
            _ => 2.0 * r as f64 - 1.0,
        });
        let y = [1.0, 2.0, 0.0, 1.0, 3.0];
        assert_eq!(
            solve_least_squares(&a, &y, 0.0),
            Err(Error::Degenerate {
                rank: 2,
                columns: 3
            })
        );
        assert!(solve_least_squares(&a, &y, 1e-6).is_ok());
    }

    #[test]
    fn ridge_matches_normal_equations_one_column() {
        let col = [1.0, 2.0, -1.0];
        let y = [0.5, 1.0, 2.0];
        let a = DenseMatrix::from_fn(3, 1, |r, _| col[r]);
        let lambda = 0.7;
        let sol = solve_least_squares(&a, &y, lambda).unwrap();
        let ata: f64 = col.iter().map(|x| x * x).sum();
        let aty: f64 = col.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((sol.coefficients[0] - aty / (ata + lambda)).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_with_ridge_gives_zero() {
        let a = DenseMatrix::from_fn(4, 3, |r, c| ((r + 1) * (c + 2)) as f64 % 5.0);
        let sol = solve_least_squares(&a, &[0.0; 4], 1e-3).unwrap();
        assert!(sol.coefficients.iter().all(|c| *c == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // For a consistent overdetermined system the solver recovers the
        // generating coefficients.
        #[test]
        fn recovers_consistent_systems(
            entries in proptest::collection::vec(-1.0f64..1.0, 8 * 4),
            coef in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let a = DenseMatrix::from_fn(8, 4, |r, c| entries[c * 8 + r]
                + if r == c { 3.0 } else { 0.0 });
            let y = a.mul_vec(&coef);
            let sol = solve_least_squares(&a, &y, 0.0).unwrap();
            for (got, want) in sol.coefficients.iter().zip(&coef) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }

        // Normal-equation residual Aᵀ(Ac − y) + λc vanishes at the solution.
        #[test]
        fn satisfies_ridge_optimality(
            entries in proptest::collection::vec(-2.0f64..2.0, 10 * 3),
            y in proptest::collection::vec(-2.0f64..2.0, 10),
            lambda in 0.0f64..1.0,
        ) {
            let a = DenseMatrix::from_fn(10, 3, |r, c| entries[c * 10 + r]);
            if let Ok(sol) = solve_least_squares(&a, &y, lambda) {
                let r: Vec<f64> = a.mul_vec(&sol.coefficients).iter().zip(&y).map(|(p, t)| p - t).collect();
                for c in 0..3 {
                    let g: f64 = a.column(c).iter().zip(&r).map(|(x, e)| x * e).sum::<f64>()
                        + lambda * sol.coefficients[c];
                    prop_assert!(g.abs() < 1e-9);
                }
            }
        }
    }
}
