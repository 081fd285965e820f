//! Row-major dense kernels on top of faer.
//!
//! Every routine takes and returns row-major complex buffers. When all inputs
//! have exactly zero imaginary parts the real f64 kernel is used instead.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) fn is_real(x: &[C64]) -> bool {
    x.iter().all(|z| z.im == 0.0)
}

pub(crate) fn all_finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn re(x: &[C64]) -> Vec<f64> {
    x.iter().map(|z| z.re).collect()
}

fn im(x: &[C64]) -> Vec<f64> {
    x.iter().map(|z| z.im).collect()
}

/// A zero-filled buffer from the allocator's zeroed pages, avoiding a memset
/// for large sizes.
pub(crate) fn zeroed(len: usize) -> Vec<C64> {
    let mut raw = std::mem::ManuallyDrop::new(vec![0.0f64; 2 * len]);
    let (ptr, cap) = (raw.as_mut_ptr(), raw.capacity());
    if cap % 2 != 0 {
        return std::mem::ManuallyDrop::into_inner(raw).chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    }
    // SAFETY: Complex<f64> is repr(C) with two f64 fields, so it has the
    // alignment of f64 and twice its size; the allocation size is unchanged
    // and all-zero bits are a valid zero.
    unsafe { Vec::from_raw_parts(ptr as *mut C64, len, cap / 2) }
}

/// A row-major complex buffer read as a `rows x cols` matrix, either directly
/// or as the transpose of a `cols x rows` buffer. No data is copied.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MatArg<'a> {
    pub data: &'a [C64],
    pub rows: usize,
    pub cols: usize,
    pub transposed: bool,
    /// All imaginary parts are exactly zero.
    pub real: bool,
}

impl<'a> MatArg<'a> {
    pub(crate) fn new(data: &'a [C64], rows: usize, cols: usize, transposed: bool) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match the matrix shape");
        Self {
            data,
            rows,
            cols,
            transposed,
            real: is_real(data),
        }
    }

    /// `(row, col)` strides in units of `C64`.
    fn strides(&self) -> (isize, isize) {
        if self.transposed {
            (1, self.rows as isize)
        } else {
            (self.cols as isize, 1)
        }
    }

    fn complex(&self) -> MatRef<'a, C64> {
        let (rs, cs) = self.strides();
        // SAFETY: every index (i, j) < (rows, cols) maps to an offset below
        // rows * cols = data.len(), and the borrow outlives the view.
        unsafe { MatRef::from_raw_parts(self.data.as_ptr(), self.rows, self.cols, rs, cs) }
    }

    /// Real (`imag = false`) or imaginary parts as a strided f64 view.
    fn part(&self, imag: bool) -> MatRef<'a, f64> {
        let (rs, cs) = self.strides();
        // SAFETY: Complex<f64> is repr(C) { re, im }, so the buffer is 2 * len
        // initialized f64 values; offset + 2 * (index) + imag stays inside it.
        // Callers guarantee a non-empty buffer.
        unsafe {
            let base = (self.data.as_ptr() as *const f64).add(usize::from(imag));
            MatRef::from_raw_parts(base, self.rows, self.cols, 2 * rs, 2 * cs)
        }
    }
}

/// Row-major `a * b`.
pub(crate) fn gemm(a: MatArg<'_>, b: MatArg<'_>) -> Vec<C64> {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = zeroed(m * n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    if !a.real && !b.real {
        matmul(
            MatMut::from_row_major_slice_mut(&mut out, m, n),
            Accum::Replace,
            a.complex(),
            b.complex(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
        return out;
    }
    let mut write = |imag: bool, lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>| {
        // SAFETY: as in `MatArg::part`; the view is dropped before the next one
        // is formed, and re/im slots never overlap.
        let dst = unsafe {
            let base = (out.as_mut_ptr() as *mut f64).add(usize::from(imag));
            MatMut::from_raw_parts_mut(base, m, n, 2 * n as isize, 2)
        };
        matmul(dst, Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    };
    match (a.real, b.real) {
        (true, true) => write(false, a.part(false), b.part(false)),
        (true, false) => {
            write(false, a.part(false), b.part(false));
            write(true, a.part(false), b.part(true));
        }
        _ => {
            write(false, a.part(false), b.part(false));
            write(true, a.part(true), b.part(false));
        }
    }
    out
}

/// `a` (m x k) times `b` (k x n), both row-major.
pub(crate) fn matmul_rm(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    gemm(MatArg::new(a, m, k, false), MatArg::new(b, k, n, false))
}

fn square_view(a: &[f64], n: usize, transpose: bool) -> MatRef<'_, f64> {
    let v = MatRef::from_row_major_slice(a, n, n);
    if transpose {
        v.transpose()
    } else {
        v
    }
}

/// Real similarity transform of a square complex matrix: `v^T x v` when
/// `forward`, else `v x v^T`.
pub(crate) fn real_similarity(v: &[f64], x: &[C64], n: usize, forward: bool) -> Vec<C64> {
    let part = |p: &[f64]| -> Vec<f64> {
        let mut tmp = vec![0.0; n * n];
        matmul(
            MatMut::from_row_major_slice_mut(&mut tmp, n, n),
            Accum::Replace,
            square_view(v, n, forward),
            MatRef::from_row_major_slice(p, n, n),
            1.0,
            Par::Seq,
        );
        let mut out = vec![0.0; n * n];
        matmul(
            MatMut::from_row_major_slice_mut(&mut out, n, n),
            Accum::Replace,
            MatRef::from_row_major_slice(&tmp, n, n),
            square_view(v, n, !forward),
            1.0,
            Par::Seq,
        );
        out
    };
    let r = part(&re(x));
    if is_real(x) {
        r.into_iter().map(|a| C64::new(a, 0.0)).collect()
    } else {
        let i = part(&im(x));
        r.into_iter().zip(i).map(|(a, b)| C64::new(a, b)).collect()
    }
}

/// `v^T x` for a real square `v` and complex `x` (n x k).
pub(crate) fn real_transpose_times(v: &[f64], x: &[C64], n: usize, k: usize) -> Vec<C64> {
    let part = |p: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * k];
        matmul(
            MatMut::from_row_major_slice_mut(&mut out, n, k),
            Accum::Replace,
            square_view(v, n, true),
            MatRef::from_row_major_slice(p, n, k),
            1.0,
            Par::Seq,
        );
        out
    };
    let r = part(&re(x));
    let i = if is_real(x) { vec![0.0; n * k] } else { part(&im(x)) };
    r.into_iter().zip(i).map(|(a, b)| C64::new(a, b)).collect()
}

fn rm_from_f64(m: MatRef<'_, f64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(C64::new(m[(i, j)], 0.0));
        }
    }
    out
}

fn rm_from_c64(m: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Row-major conjugate transpose of `m`.
fn rm_adjoint_c64(m: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)].conj());
        }
    }
    out
}

/// Thin SVD `a = u diag(s) vh` with `u` m x r, `vh` r x n, r = min(m, n).
pub(crate) struct Svd {
    pub u: Vec<C64>,
    pub s: Vec<f64>,
    pub vh: Vec<C64>,
}

pub(crate) fn svd_rm(a: &[C64], m: usize, n: usize) -> Result<Svd> {
    if !all_finite(a) {
        return Err(Error::NonFinite("svd"));
    }
    let r = m.min(n);
    if is_real(a) {
        let ar = re(a);
        let view = MatRef::from_row_major_slice(&ar, m, n);
        let svd = view
            .thin_svd()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let s = (0..r).map(|i| svd.S()[i]).collect();
        let u = rm_from_f64(svd.U());
        let vh = rm_from_f64(svd.V().transpose());
        Ok(Svd { u, s, vh })
    } else {
        let view = MatRef::from_row_major_slice(a, m, n);
        let svd = view
            .thin_svd()
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let s = (0..r).map(|i| svd.S()[i].re).collect();
        let u = rm_from_c64(svd.U());
        let vh = rm_adjoint_c64(svd.V());
        Ok(Svd { u, s, vh })
    }
}

pub(crate) fn singular_values_rm(a: &[C64], m: usize, n: usize) -> Result<Vec<f64>> {
    if !all_finite(a) {
        return Err(Error::NonFinite("singular values"));
    }
    if is_real(a) {
        let ar = re(a);
        MatRef::from_row_major_slice(&ar, m, n)
            .singular_values()
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    } else {
        MatRef::from_row_major_slice(a, m, n)
            .singular_values()
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Thin QR: `q` is m x r with orthonormal columns, `r` is r x n.
pub(crate) fn qr_rm(a: &[C64], m: usize, n: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    if !all_finite(a) {
        return Err(Error::NonFinite("qr"));
    }
    if is_real(a) {
        let ar = re(a);
        let qr = MatRef::from_row_major_slice(&ar, m, n).qr();
        let q: Mat<f64> = qr.compute_thin_Q();
        Ok((rm_from_f64(q.as_ref()), rm_from_f64(qr.thin_R())))
    } else {
        let qr = MatRef::from_row_major_slice(a, m, n).qr();
        let q: Mat<C64> = qr.compute_thin_Q();
        Ok((rm_from_c64(q.as_ref()), rm_from_c64(qr.thin_R())))
    }
}

/// Thin LQ: `l` is m x r, `q` is r x n with orthonormal rows.
pub(crate) fn lq_rm(a: &[C64], m: usize, n: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    if !all_finite(a) {
        return Err(Error::NonFinite("lq"));
    }
    // a^H = Q R  =>  a = R^H Q^H
    if is_real(a) {
        let ar = re(a);
        let qr = MatRef::from_row_major_slice(&ar, m, n).transpose().qr();
        let q: Mat<f64> = qr.compute_thin_Q();
        Ok((
            rm_from_f64(qr.thin_R().transpose()),
            rm_from_f64(q.as_ref().transpose()),
        ))
    } else {
        let ah: Mat<C64> = MatRef::from_row_major_slice(a, m, n).adjoint().to_owned();
        let qr = ah.qr();
        let q: Mat<C64> = qr.compute_thin_Q();
        Ok((rm_adjoint_c64(qr.thin_R()), rm_adjoint_c64(q.as_ref())))
    }
}

/// Eigen-decomposition of a real symmetric row-major `n x n` matrix:
/// ascending eigenvalues and row-major eigenvectors (column `k` is vector `k`).
pub(crate) fn eigh_real_rm(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigh"));
    }
    let eig = MatRef::from_row_major_slice(a, n, n)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let vals = (0..n).map(|i| eig.S()[i]).collect();
    let u = eig.U();
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vecs[i * n + j] = u[(i, j)];
        }
    }
    Ok((vals, vecs))
}
