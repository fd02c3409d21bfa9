//! Block-sparse LDL^T factorization tailored to the DMN Newton matrix.
//!
//! The matrix `A^T W T A` couples two jump nodes exactly when one is an
//! ancestor of the other, and the storage order eliminates children before
//! parents. Eliminating a node only updates pairs of its ancestors, which
//! sit on a single root path and are already coupled: the factorization is
//! fill-free, with `L` living on the same ancestor structure as the matrix.
//! One factorization serves the Newton step and the six tangent right-hand
//! sides.

use nalgebra::{Matrix3, Matrix3x6, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Assembled lower-triangular block structure: column `c` holds the
/// diagonal block plus one block per ancestor (ascending indices).
pub(crate) struct BlockMatrix<S: Real> {
    pub diag: Vec<Matrix3<S>>,
    pub cols: Vec<Vec<Matrix3<S>>>,
}

impl<S: Real> BlockMatrix<S> {
    pub fn zeros(ancestors: &[Vec<usize>]) -> Self {
        Self {
            diag: vec![Matrix3::zeros(); ancestors.len()],
            cols: ancestors.iter().map(|a| vec![Matrix3::zeros(); a.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for d in &mut self.diag {
            d.fill(S::zero());
        }
        for col in &mut self.cols {
            for b in col {
                b.fill(S::zero());
            }
        }
    }
}

/// In-place block LDL^T on the ancestor structure.
pub(crate) struct TreeLdlt<S: Real> {
    ancestors: Vec<Vec<usize>>,
    /// Inverse pivot blocks; zero matrix for pinned (null) columns.
    diag_inv: Vec<Matrix3<S>>,
    diag: Vec<Matrix3<S>>,
    cols: Vec<Vec<Matrix3<S>>>,
}

impl<S: Real> TreeLdlt<S> {
    /// Factors the assembled matrix. `allow_null_pivots` pins columns whose
    /// pivot vanishes (dead nodes of a reference assembly) instead of
    /// failing.
    pub fn factor(
        ancestors: &[Vec<usize>],
        matrix: &BlockMatrix<S>,
        allow_null_pivots: bool,
        scale: S,
    ) -> Result<Self> {
        let n = ancestors.len();
        let mut diag = matrix.diag.clone();
        let mut cols = matrix.cols.clone();
        let mut diag_inv = vec![Matrix3::zeros(); n];
        let null_tol = real::<S>(1e-300).max(scale * real::<S>(1e-14));

        for c in 0..n {
            let d = diag[c];
            let pivot_scale = d.norm();
            if pivot_scale <= null_tol {
                if allow_null_pivots {
                    // Pinned column: jump stays zero, off-diagonals are
                    // structurally zero as well.
                    diag_inv[c] = Matrix3::zeros();
                    continue;
                }
                return Err(Error::numerical(format!(
                    "singular Newton matrix at jump node {c}"
                )));
            }
            let inv = d.try_inverse().ok_or_else(|| {
                Error::numerical(format!("singular pivot block at jump node {c}"))
            })?;
            diag_inv[c] = inv;

            // L blocks of this column.
            let anc = &ancestors[c];
            let raw: Vec<Matrix3<S>> = cols[c].clone();
            for (i, b) in raw.iter().enumerate() {
                cols[c][i] = b * inv;
            }
            // Rank-3 update of the trailing ancestor pairs; all targets are
            // ancestor-ancestor couplings on the same root path.
            for i in 0..anc.len() {
                let li = cols[c][i];
                for j in 0..=i {
                    let update = li * raw[j].transpose();
                    let (row, col) = (anc[i], anc[j]);
                    if row == col {
                        diag[row] -= update;
                    } else {
                        // row > col, so the block lives in column `col` at
                        // the position of `row` in its ancestor list.
                        let pos = ancestors[col]
                            .iter()
                            .position(|&a| a == row)
                            .expect("ancestor structure is closed under pairs");
                        cols[col][pos] -= update;
                    }
                }
            }
        }

        Ok(Self { ancestors: ancestors.to_vec(), diag_inv, diag, cols })
    }

    fn forward_backward<const C: usize>(
        &self,
        rhs: &mut [nalgebra::SMatrix<S, 3, C>],
    ) {
        let n = self.ancestors.len();
        // Forward: L z = b.
        for c in 0..n {
            let zc = rhs[c];
            for (i, &a) in self.ancestors[c].iter().enumerate() {
                let update = self.cols[c][i] * zc;
                rhs[a] -= update;
            }
        }
        // Diagonal.
        for c in 0..n {
            rhs[c] = self.diag_inv[c] * rhs[c];
        }
        // Backward: L^T x = w.
        for c in (0..n).rev() {
            let mut xc = rhs[c];
            for (i, &a) in self.ancestors[c].iter().enumerate() {
                xc -= self.cols[c][i].transpose() * rhs[a];
            }
            rhs[c] = xc;
        }
    }

    pub fn solve_vec(&self, rhs: &mut [Vector3<S>]) {
        self.forward_backward::<1>(rhs);
    }

    pub fn solve_mat(&self, rhs: &mut [Matrix3x6<S>]) {
        self.forward_backward::<6>(rhs);
    }

    /// Frobenius norm of the factored matrix diagonal, for diagnostics.
    #[allow(dead_code)]
    pub fn diag_norm(&self) -> S {
        self.diag.iter().fold(S::zero(), |acc, d| acc + d.norm_squared()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Assembles an SPD matrix from per-slot quadratic forms, the same way
    /// the Newton matrix is built, and compares against a dense LU solve.
    #[test]
    fn matches_dense_solve() {
        use nalgebra::{DMatrix, DVector, Matrix6, Matrix6x3};
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(5);

        // Depth-2 tree in elimination order: leaves 0, 1 under node 2, and
        // the root 3. Slot paths run root-first.
        let ancestors = vec![vec![2usize, 3], vec![2, 3], vec![3], vec![]];
        let slot_paths: Vec<Vec<usize>> = vec![
            vec![3, 2, 0],
            vec![3, 2, 0],
            vec![3, 2, 1],
            vec![3, 2, 1],
            vec![3],
            vec![3],
        ];
        let n = ancestors.len();

        let mut block = BlockMatrix::<f64>::zeros(&ancestors);
        let mut dense = DMatrix::<f64>::zeros(3 * n, 3 * n);
        for path in &slot_paths {
            let ops: Vec<Matrix6x3<f64>> =
                path.iter().map(|_| Matrix6x3::from_fn(|_, _| rng.gen_range(-1.0..1.0))).collect();
            let raw = Matrix6::<f64>::from_fn(|_, _| rng.gen_range(-0.3..0.3));
            let t = raw.transpose() * raw + Matrix6::identity();
            for (i, &ni) in path.iter().enumerate() {
                for (j, &nj) in path.iter().enumerate() {
                    let contrib = ops[i].transpose() * t * ops[j];
                    if ni == nj {
                        block.diag[ni] += contrib;
                    } else if ni > nj {
                        let pos = ancestors[nj].iter().position(|&a| a == ni).unwrap();
                        block.cols[nj][pos] += contrib;
                    }
                    for a in 0..3 {
                        for b in 0..3 {
                            dense[(3 * ni + a, 3 * nj + b)] += contrib[(a, b)];
                        }
                    }
                }
            }
        }

        let b: Vec<Vector3<f64>> =
            (0..n).map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let mut rhs = b.clone();
        let ldlt = TreeLdlt::factor(&ancestors, &block, false, 1.0).unwrap();
        ldlt.solve_vec(&mut rhs);

        let mut flat = DVector::<f64>::zeros(3 * n);
        for c in 0..n {
            flat.rows_mut(3 * c, 3).copy_from(&b[c]);
        }
        let x = dense.lu().solve(&flat).unwrap();
        for c in 0..n {
            for k in 0..3 {
                assert!(
                    (rhs[c][k] - x[3 * c + k]).abs() < 1e-9,
                    "block {c} component {k}: {} vs {}",
                    rhs[c][k],
                    x[3 * c + k]
                );
            }
        }
    }
}
