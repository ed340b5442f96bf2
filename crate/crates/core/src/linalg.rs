//! Dense complex linear algebra: tensor products, partial traces, Hermitian
//! spectral calculus and Schmidt decompositions.
//!
//! Subsystem A is always the slow (leftmost) tensor index: for a vector on
//! `d_a * d_b` dimensions, entry `j * d_b + k` is the amplitude of `|j⟩⊗|k⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Which factor of a bipartite space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c64(x, 0.0)))
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let d = values.len();
    ComplexMatrix::from_fn(d, d, |i, j| if i == j { c64(values[i], 0.0) } else { Complex64::ZERO })
}

pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
    u * v.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn real_trace(m: &ComplexMatrix) -> f64 {
    m.trace().re
}

/// Operator (spectral) norm.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn frobenius_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn purity(m: &ComplexMatrix) -> f64 {
    (m * m).trace().re
}

/// Unitary deviation `‖U†U − I‖` (entrywise max).
pub fn unitary_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Transpose with respect to the orthonormal basis formed by the columns of `basis`.
///
/// `None` means the computational basis.
pub fn transpose_in(m: &ComplexMatrix, basis: Option<&ComplexMatrix>) -> ComplexMatrix {
    match basis {
        None => m.transpose(),
        Some(u) => u * (u.adjoint() * m * u).transpose() * u.adjoint(),
    }
}

/// Kronecker product with A as the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_limited(a, b, tol::MAX_DIM)
}

pub fn kron_limited(a: &ComplexMatrix, b: &ComplexMatrix, limit: usize) -> Result<ComplexMatrix> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    let requested = rows.max(cols);
    if requested > limit {
        return Err(Error::SizeLimit { requested, limit });
    }
    Ok(a.kronecker(b))
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

fn check_bipartite(m: &ComplexMatrix, dims: (usize, usize)) -> Result<()> {
    let n = dims.0 * dims.1;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Shape(format!(
            "expected {n}x{n} for dims {dims:?}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Partial trace of a bipartite operator, keeping the tagged factor.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
    check_bipartite(m, dims)?;
    let traced = match keep {
        Subsystem::A => 1,
        Subsystem::B => 0,
    };
    trace_out(m, &[dims.0, dims.1], traced)
}

/// Traces out factor `traced` of a multipartite operator with factor dimensions `dims`.
pub fn trace_out(m: &ComplexMatrix, dims: &[usize], traced: usize) -> Result<ComplexMatrix> {
    let n: usize = dims.iter().product();
    if m.nrows() != n || m.ncols() != n || traced >= dims.len() {
        return Err(Error::Shape(format!(
            "cannot trace factor {traced} of dims {dims:?} from {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let outer: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let inner: usize = dims[traced + 1..].iter().product();
    let out = outer * inner;
    let mut r = ComplexMatrix::zeros(out, out);
    for i0 in 0..outer {
        for i1 in 0..inner {
            for j0 in 0..outer {
                for j1 in 0..inner {
                    let mut s = Complex64::ZERO;
                    for k in 0..mid {
                        s += m[((i0 * mid + k) * inner + i1, (j0 * mid + k) * inner + j1)];
                    }
                    r[(i0 * inner + i1, j0 * inner + j1)] = s;
                }
            }
        }
    }
    Ok(r)
}

/// Reorders tensor factors: output factor `p` is input factor `perm[p]`.
pub fn permute_factors(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n: usize = dims.iter().product();
    if m.nrows() != n || m.ncols() != n || perm.len() != dims.len() {
        return Err(Error::Shape(format!("cannot permute dims {dims:?} by {perm:?}")));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let index_map: Vec<usize> = (0..n)
        .map(|new_index| {
            // decompose new index into digits of new_dims, scatter into old positions
            let mut digits = vec![0usize; dims.len()];
            let mut rest = new_index;
            for p in (0..new_dims.len()).rev() {
                digits[perm[p]] = rest % new_dims[p];
                rest /= new_dims[p];
            }
            digits.iter().zip(dims).fold(0, |acc, (&d, &size)| acc * size + d)
        })
        .collect();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| m[(index_map[i], index_map[j])]))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues above the support cutoff.
    pub fn rank(&self) -> usize {
        let cut = rank_cutoff(self.max_eigenvalue());
        self.eigenvalues.iter().filter(|&&l| l > cut).count()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(k).scale_mut(fl);
        }
        scaled * v.adjoint()
    }

    /// Orthonormal basis of the span of the first `k` eigenvectors.
    pub fn leading(&self, k: usize) -> ComplexMatrix {
        self.eigenvectors.columns(0, k).into_owned()
    }
}

pub fn rank_cutoff(max_eigenvalue: f64) -> f64 {
    (tol::RANK_REL * max_eigenvalue).max(tol::RANK_FLOOR)
}

/// Hermitian eigendecomposition with descending eigenvalues and phase-fixed vectors.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    let dev = hermitian_deviation(h);
    if dev > tol::VALIDATION {
        return Err(Error::validation(
            "hermitian",
            format!("max |h - h†| = {dev:e} exceeds {:e}", tol::VALIDATION),
        ));
    }
    Ok(herm_eig_symmetrized(h))
}

/// Eigendecomposition of `(h + h†)/2` without a Hermiticity check.
pub(crate) fn herm_eig_symmetrized(h: &ComplexMatrix) -> HermEig {
    let n = h.nrows();
    if n == 0 {
        return HermEig {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let sym = hermitize(h);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = largest_component(col.iter().copied());
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::ONE };
        eigenvectors.set_column(dst, &(col * phase));
    }
    HermEig {
        eigenvalues,
        eigenvectors,
    }
}

fn largest_component(entries: impl Iterator<Item = Complex64>) -> Complex64 {
    let values: Vec<Complex64> = entries.collect();
    let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // first entry within rounding of the maximum, so ties resolve by index
    values
        .into_iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(Complex64::ZERO)
}

fn psd_eig(p: &ComplexMatrix) -> Result<HermEig> {
    let eig = herm_eig(p)?;
    let min = eig.min_eigenvalue();
    if min < -tol::VALIDATION {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(eig)
}

/// Principal square root of a PSD matrix (small negative eigenvalues clipped to zero).
pub fn psd_sqrt(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = psd_eig(p)?;
    let cut = rank_cutoff(eig.max_eigenvalue());
    Ok(eig.map(|l| if l > cut { l.sqrt() } else { 0.0 }))
}

/// Power of a PSD matrix restricted to its support; also returns the support rank.
pub fn support_pinv(p: &ComplexMatrix, power: f64) -> Result<(ComplexMatrix, usize)> {
    let eig = psd_eig(p)?;
    let cut = rank_cutoff(eig.max_eigenvalue());
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cut).count();
    Ok((eig.map(|l| if l > cut { l.powf(power) } else { 0.0 }), rank))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(support_isometry(p)?.map(|v| &v * v.adjoint()).unwrap_or_else(|| ComplexMatrix::zeros(p.nrows(), p.nrows())))
}

/// Columns spanning the support of a PSD matrix (eigenvectors, descending eigenvalue),
/// or `None` for the zero matrix.
pub fn support_isometry(p: &ComplexMatrix) -> Result<Option<ComplexMatrix>> {
    let eig = psd_eig(p)?;
    let rank = eig.rank();
    Ok((rank > 0).then(|| eig.leading(rank)))
}

/// Schmidt decomposition of a bipartite pure vector.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Nonincreasing, strictly positive.
    pub coefficients: Vec<f64>,
    /// Column `k` is `|l_k⟩`.
    pub left: ComplexMatrix,
    /// Column `k` is `|r_k⟩`.
    pub right: ComplexMatrix,
    pub dims: (usize, usize),
}

impl SchmidtDecomposition {
    /// Number of coefficients above `SCHMIDT_REL` times the largest.
    pub fn rank(&self) -> usize {
        let max = self.coefficients.first().copied().unwrap_or(0.0);
        self.coefficients.iter().filter(|&&c| c >= tol::SCHMIDT_REL * max).count()
    }

    pub fn reconstruct(&self) -> ComplexVector {
        let (da, db) = self.dims;
        let mut v = ComplexVector::zeros(da * db);
        for (k, &c) in self.coefficients.iter().enumerate() {
            let l = self.left.column(k).into_owned();
            let r = self.right.column(k).into_owned();
            v += kron_vec(&l, &r).scale(c);
        }
        v
    }
}

pub fn schmidt(v: &ComplexVector, dims: (usize, usize)) -> Result<SchmidtDecomposition> {
    let (da, db) = dims;
    if v.len() != da * db {
        return Err(Error::Shape(format!("vector length {} does not match dims {dims:?}", v.len())));
    }
    if v.norm() == 0.0 {
        return Err(Error::validation("nonzero", "Schmidt decomposition of the zero vector"));
    }
    let psi = ComplexMatrix::from_fn(da, db, |j, k| v[j * db + k]);
    let svd = psi.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let kept: Vec<usize> = order.into_iter().filter(|&k| svd.singular_values[k] > 0.0).collect();
    let mut left = ComplexMatrix::zeros(da, kept.len());
    let mut right = ComplexMatrix::zeros(db, kept.len());
    for (dst, &k) in kept.iter().enumerate() {
        left.set_column(dst, &u.column(k));
        // psi = Σ s u v†, so the right vector is the transpose of row k of v†
        right.set_column(dst, &v_t.row(k).transpose());
    }
    Ok(SchmidtDecomposition {
        coefficients: kept.iter().map(|&k| svd.singular_values[k]).collect(),
        left,
        right,
        dims,
    })
}

/// Orthonormal basis (as columns) of the right nullspace of `m`, singular values ≤ `cutoff`.
pub fn nullspace(m: &ComplexMatrix, cutoff: f64) -> ComplexMatrix {
    let n = m.ncols();
    // thin SVD only yields min(rows, cols) right vectors; pad to a tall matrix
    let padded = if m.nrows() < n {
        let mut p = ComplexMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t");
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= cutoff).collect();
    let mut basis = ComplexMatrix::zeros(n, null.len());
    for (dst, &k) in null.iter().enumerate() {
        basis.set_column(dst, &v_t.row(k).adjoint());
    }
    basis
}

/// Real counterpart of [`nullspace`].
pub fn real_nullspace(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t");
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= cutoff).collect();
    let mut basis = DMatrix::zeros(n, null.len());
    for (dst, &k) in null.iter().enumerate() {
        basis.set_column(dst, &v_t.row(k).transpose());
    }
    basis
}

/// Row-major vectorization.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_iterator(m.len(), m.transpose().iter().copied())
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, v.iter().copied())
}
