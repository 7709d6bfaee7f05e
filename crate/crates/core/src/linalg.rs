//! Grounded-Laplacian solves shared by the hitting-time and resistance code.
//!
//! Removing one vertex (the ground) from the Laplacian of a connected graph
//! leaves a symmetric positive definite matrix. Small systems are factored
//! densely; larger ones use Jacobi-preconditioned conjugate gradients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest reduced system solved by dense Cholesky.
pub const DENSE_LIMIT: usize = 512;

pub(crate) struct GroundedLaplacian<'a> {
    graph: &'a Graph,
    ground: usize,
    /// vertex -> row, `usize::MAX` for the ground
    row: Vec<usize>,
    dense: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl<'a> GroundedLaplacian<'a> {
    pub fn new(graph: &'a Graph, ground: usize) -> Result<Self> {
        let n = graph.n();
        let mut row = vec![usize::MAX; n];
        let mut next = 0;
        for (v, slot) in row.iter_mut().enumerate() {
            if v != ground {
                *slot = next;
                next += 1;
            }
        }
        let dense = if n - 1 <= DENSE_LIMIT {
            let mut m = DMatrix::<f64>::zeros(n - 1, n - 1);
            for v in 0..n {
                let r = row[v];
                if r == usize::MAX {
                    continue;
                }
                m[(r, r)] = graph.degree(v) as f64;
                for &w in graph.neighbors(v) {
                    if row[w] != usize::MAX {
                        m[(r, row[w])] = -1.0;
                    }
                }
            }
            Some(m.cholesky().ok_or_else(|| {
                Error::NonConvergence("grounded Laplacian is not positive definite".into())
            })?)
        } else {
            None
        };
        Ok(GroundedLaplacian {
            graph,
            ground,
            row,
            dense,
        })
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for v in 0..self.graph.n() {
            let r = self.row[v];
            if r == usize::MAX {
                continue;
            }
            let mut acc = self.graph.degree(v) as f64 * x[r];
            for &w in self.graph.neighbors(v) {
                let c = self.row[w];
                if c != usize::MAX {
                    acc -= x[c];
                }
            }
            out[r] = acc;
        }
    }

    /// Solves `L_ground x = b` where `b` is indexed by vertex (the ground entry
    /// is ignored). The returned vector is indexed by vertex with `x[ground] = 0`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.graph.n() - 1;
        let rhs: Vec<f64> = (0..self.graph.n())
            .filter(|&v| v != self.ground)
            .map(|v| b[v])
            .collect();
        let reduced = match &self.dense {
            Some(chol) => {
                let bvec = DVector::from_column_slice(&rhs);
                let mut x = chol.solve(&bvec);
                // one step of iterative refinement
                let mut ax = vec![0.0; m];
                self.apply(x.as_slice(), &mut ax);
                let r = DVector::from_iterator(m, rhs.iter().zip(&ax).map(|(b, a)| b - a));
                x += chol.solve(&r);
                x.as_slice().to_vec()
            }
            None => self.conjugate_gradient(&rhs)?,
        };
        let mut out = vec![0.0; self.graph.n()];
        for v in 0..self.graph.n() {
            if self.row[v] != usize::MAX {
                out[v] = reduced[self.row[v]];
            }
        }
        Ok(out)
    }

    fn conjugate_gradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = b.len();
        let inv_diag: Vec<f64> = (0..self.graph.n())
            .filter(|&v| v != self.ground)
            .map(|v| 1.0 / self.graph.degree(v) as f64)
            .collect();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; m]);
        }
        let mut x = vec![0.0; m];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; m];
        let mut rz = dot(&r, &z);
        let max_iter = 20 * m + 100;
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= 1e-14 * bnorm {
                return Ok(x);
            }
            for i in 0..m {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        // recompute the true residual before giving up
        self.apply(&x, &mut ap);
        let res: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
        if norm(&res) <= 1e-12 * bnorm {
            Ok(x)
        } else {
            Err(Error::NonConvergence(format!(
                "conjugate gradient stalled at relative residual {:.3e} after {max_iter} iterations",
                norm(&res) / bnorm
            )))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense Gaussian elimination with partial pivoting for the small systems of
/// the cover-time recursion. `a` is row-major `m × m`; solution overwrites `b`.
pub(crate) fn solve_small(a: &mut [f64], b: &mut [f64], m: usize) -> Result<()> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .expect("non-empty range");
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(Error::NonConvergence("singular cover-time system".into()));
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * m + col];
        for i in col + 1..m {
            let factor = a[i * m + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[i * m + k] -= factor * a[col * m + k];
            }
            b[i] -= factor * b[col];
        }
    }
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in col + 1..m {
            acc -= a[col * m + k] * b[k];
        }
        b[col] = acc / a[col * m + col];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;

    #[test]
    fn dense_and_iterative_agree() {
        let g = graph::torus_grid(6).unwrap();
        let lap = GroundedLaplacian::new(&g, 0).unwrap();
        let b: Vec<f64> = (0..g.n()).map(|v| (v as f64).sin()).collect();
        let dense = lap.solve(&b).unwrap();
        let iterative = lap.conjugate_gradient(&b[1..]).unwrap();
        for (d, i) in dense[1..].iter().zip(&iterative) {
            assert!((d - i).abs() < 1e-10);
        }
    }

    #[test]
    fn small_solver() {
        let mut a = vec![0.0, 2.0, 1.0, 1.0];
        let mut b = vec![4.0, 3.0];
        solve_small(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 2.0).abs() < 1e-15);
    }
}
