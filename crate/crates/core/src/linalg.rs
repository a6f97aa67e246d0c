//! Dense matrix helpers shared by the other modules.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Block-diagonal matrix from a list of (possibly rectangular, possibly empty) blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row mismatch");
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `n x k` matrix whose columns are the unit vectors `e_{idx[0]}, e_{idx[1]}, ...`.
pub fn selector(n: usize, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, idx.len());
    for (c, &r) in idx.iter().enumerate() {
        out[(r, c)] = 1.0;
    }
    out
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * aij));
            }
        }
    }
    out
}

/// Eigenvalues of a real square matrix via the real Schur form.
///
/// Returns `None` when the QR iteration fails to converge.
pub fn eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 1000 * n.max(10))?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Numerical rank of a complex matrix from its singular values.
pub fn rank_c(m: &CMatrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * smax.max(1.0) * 1e3;
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_c(&to_complex(m))
}

/// Greedy nearest-neighbour multiset matching of two spectra; returns the
/// largest matched distance, or infinity when the sizes differ.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let key = |z: &Complex64| (z.re, z.im);
    let mut lhs: Vec<Complex64> = a.to_vec();
    lhs.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal));
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for z in &lhs {
        let mut best = None;
        for (k, w) in b.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (z - w).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        let (k, d) = best.expect("equal lengths");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diag_handles_empty_and_rectangular_blocks() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let e = DMatrix::<f64>::zeros(0, 1);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let m = block_diag(&[a, e, b]);
        assert_eq!(m.shape(), (3, 4));
        assert_eq!(m[(0, 1)], 2.0);
        assert_eq!(m[(2, 3)], 4.0);
        assert_eq!(m[(1, 0)], 0.0);
    }

    #[test]
    fn kron_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron(&DMatrix::identity(2, 2), &a);
        assert_eq!(k.view((2, 2), (2, 2)), a);
        assert_eq!(k[(0, 2)], 0.0);
    }

    #[test]
    fn spectrum_distance_is_order_free() {
        let a = vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0), Complex64::new(-2.0, 0.0)];
        let b = vec![Complex64::new(-2.0, 0.0), Complex64::new(-1.0, -1.0), Complex64::new(-1.0, 1.0)];
        assert_eq!(spectrum_distance(&a, &b), 0.0);
        assert!(spectrum_distance(&a, &b[..2]).is_infinite());
    }

    #[test]
    fn rank_of_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(rank(&m), 1);
        assert_eq!(rank(&DMatrix::identity(3, 3)), 3);
    }
}
