//! Small complex linear-algebra helpers shared by the quantum modules.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn re(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

/// Builds a complex matrix from real row-major entries.
pub fn real_mat(rows: usize, cols: usize, entries: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, entries.iter().map(|&x| re(x)))
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn pauli_x() -> CMat {
    real_mat(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)])
}

pub fn pauli_z() -> CMat {
    real_mat(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Frobenius norm of `a - b`.
pub fn dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && dist(m, &m.adjoint()) <= tol
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

/// Real symmetric eigen-decomposition, eigenvalues ascending.
pub fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let h = (m + m.transpose()).scale(0.5);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

/// Binary (base-2) Shannon entropy of a probability vector, ignoring zeros.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 1e-300).map(|&x| -x * x.log2()).sum()
}

/// Unitary factor of the polar decomposition `m = U |m|`.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    u * v_t
}

/// Orthonormal basis of the null space of `m` (columns), using a relative threshold.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return identity(n);
    }
    // Pad to at least square so the SVD exposes all right singular vectors.
    let padded = if m.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax.max(1.0);
    let cols: Vec<CVec> = (0..n)
        .filter(|&k| svd.singular_values[k] <= cut)
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis of the null space of a real matrix, from the eigen-decomposition of
/// `mᵀm`. Singular values below `rel_tol` times the largest (or 1) count as zero.
pub fn null_space_real(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let (vals, vecs) = eigh_real(&(m.transpose() * m));
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let cut = (rel_tol * rel_tol).max(1e-13) * top;
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| vals[k] <= cut)
        .map(|k| vecs.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
