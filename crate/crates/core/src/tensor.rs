//! Dense complex tensors stored row-major over their declared axis order.

use std::borrow::Cow;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Singular values below this fraction of the largest one are always dropped.
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: linalg::zeroed(len),
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self { shape, data }
    }

    /// Row-major `rows x cols` matrix.
    pub fn from_matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(vec![n, n], |i| {
            if i[0] == i[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.data)
    }

    pub fn is_real(&self) -> bool {
        linalg::is_real(&self.data)
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Reorders axes so that axis `k` of the result is axis `axes[k]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        check_permutation(axes, self.rank())?;
        Ok(self.permuted(axes).into_owned())
    }

    fn permuted(&self, axes: &[usize]) -> Cow<'_, Self> {
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Cow::Borrowed(self);
        }
        // merge runs of axes that stay adjacent; fewer, longer loops
        let mut groups: Vec<(usize, usize)> = Vec::new(); // (last source axis, extent)
        for &ax in axes {
            match groups.last_mut() {
                Some((end, ext)) if ax == *end + 1 => {
                    *end = ax;
                    *ext *= self.shape[ax];
                }
                _ => groups.push((ax, self.shape[ax])),
            }
        }
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let len = self.data.len();
        let mut data = linalg::zeroed(len);
        if len > 0 {
            let mut src_strides = vec![1usize; self.rank()];
            for ax in (0..self.rank().saturating_sub(1)).rev() {
                src_strides[ax] = src_strides[ax + 1] * self.shape[ax + 1];
            }
            let ng = groups.len();
            let ext: Vec<usize> = groups.iter().map(|g| g.1).collect();
            let src: Vec<usize> = groups.iter().map(|g| src_strides[g.0]).collect();
            let mut dst = vec![1usize; ng];
            for g in (0..ng - 1).rev() {
                dst[g] = dst[g + 1] * ext[g + 1];
            }
            // `last` is contiguous in the output, `unit` in the source
            let last = ng - 1;
            let unit = src.iter().position(|&s| s == 1).unwrap_or(last);
            let outer: Vec<usize> = (0..ng).filter(|&g| g != last && g != unit).collect();
            let count: usize = outer.iter().map(|&g| ext[g]).product();
            let mut idx = vec![0usize; outer.len()];
            let (mut sb, mut db) = (0usize, 0usize);
            for _ in 0..count {
                if unit == last {
                    let n = ext[last];
                    data[db..db + n].copy_from_slice(&self.data[sb..sb + n]);
                } else {
                    // tiled transpose of the (unit, last) plane
                    const TILE: usize = 16;
                    let (ne, nl) = (ext[unit], ext[last]);
                    let (du, sl) = (dst[unit], src[last]);
                    for u0 in (0..ne).step_by(TILE) {
                        for l0 in (0..nl).step_by(TILE) {
                            for u in u0..(u0 + TILE).min(ne) {
                                let row = db + u * du;
                                for l in l0..(l0 + TILE).min(nl) {
                                    data[row + l] = self.data[sb + u + l * sl];
                                }
                            }
                        }
                    }
                }
                for k in (0..outer.len()).rev() {
                    let g = outer[k];
                    idx[k] += 1;
                    sb += src[g];
                    db += dst[g];
                    if idx[k] < ext[g] {
                        break;
                    }
                    sb -= src[g] * ext[g];
                    db -= dst[g] * ext[g];
                    idx[k] = 0;
                }
            }
        }
        Cow::Owned(Self { shape, data })
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&mut self, factor: C64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "cannot add shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_permutation(axes: &[usize], rank: usize) -> Result<()> {
    if axes.len() != rank {
        return Err(Error::InvalidSplit(format!(
            "permutation of length {} for rank {rank}",
            axes.len()
        )));
    }
    let mut seen = vec![false; rank];
    for &a in axes {
        if a >= rank {
            return Err(Error::AxisOutOfRange { axis: a, rank });
        }
        if seen[a] {
            return Err(Error::InvalidSplit(format!("axis {a} repeated")));
        }
        seen[a] = true;
    }
    Ok(())
}

/// Whether axes `rows ++ cols` are stored row-major (`Some(false)`) or as
/// `cols ++ rows` (`Some(true)`, the transposed matrix).
fn layout(rows: &[usize], cols: &[usize]) -> Option<bool> {
    let is_identity = |it: &mut dyn Iterator<Item = usize>| it.enumerate().all(|(k, a)| k == a);
    if is_identity(&mut rows.iter().chain(cols).copied()) {
        Some(false)
    } else if is_identity(&mut cols.iter().chain(rows).copied()) {
        Some(true)
    } else {
        None
    }
}

/// A `rows x cols` matrix over `t`, borrowed when the layout allows.
fn operand<'a>(t: &'a DenseTensor, rows: &[usize], cols: &[usize]) -> (Cow<'a, DenseTensor>, bool) {
    match layout(rows, cols) {
        Some(transposed) => (Cow::Borrowed(t), transposed),
        None => {
            let perm: Vec<usize> = rows.iter().chain(cols).copied().collect();
            (t.permuted(&perm), false)
        }
    }
}

/// Sums over paired axes. The result carries the unpaired axes of `a`
/// followed by the unpaired axes of `b`, each in their original order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, axis_pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut paired_a = vec![false; ra];
    let mut paired_b = vec![false; rb];
    for &(x, y) in axis_pairs {
        if x >= ra {
            return Err(Error::AxisOutOfRange { axis: x, rank: ra });
        }
        if y >= rb {
            return Err(Error::AxisOutOfRange { axis: y, rank: rb });
        }
        if paired_a[x] || paired_b[y] {
            return Err(Error::InvalidSplit("axis paired twice".into()));
        }
        if a.shape[x] != b.shape[y] {
            return Err(Error::ExtentMismatch {
                axis_a: x,
                extent_a: a.shape[x],
                axis_b: y,
                extent_b: b.shape[y],
            });
        }
        paired_a[x] = true;
        paired_b[y] = true;
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !paired_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !paired_b[i]).collect();

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();
    let k: usize = axis_pairs.iter().map(|p| a.shape[p.0]).product();

    // Any common order of the paired axes works; prefer one that lets both
    // operands be read in place, directly or transposed.
    let mut by_a = axis_pairs.to_vec();
    by_a.sort_unstable();
    let mut by_b = axis_pairs.to_vec();
    by_b.sort_unstable_by_key(|p| p.1);
    let cost = |pairs: &[(usize, usize)]| {
        let pa: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pb: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let copy_a = layout(&free_a, &pa).is_none() as usize * a.len();
        let copy_b = layout(&pb, &free_b).is_none() as usize * b.len();
        copy_a + copy_b
    };
    let pairs = [axis_pairs, &by_a[..], &by_b[..]]
        .into_iter()
        .min_by_key(|p| cost(p))
        .expect("non-empty candidates");
    let pa: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let pb: Vec<usize> = pairs.iter().map(|p| p.1).collect();

    let (ta, a_t) = operand(a, &free_a, &pa);
    let (tb, b_t) = operand(b, &pb, &free_b);
    let data = linalg::gemm(
        linalg::MatArg::new(&ta.data, m, k, a_t),
        linalg::MatArg::new(&tb.data, k, n, b_t),
    );

    let shape = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(DenseTensor { shape, data })
}

#[derive(Clone, Debug)]
pub struct TruncatedFactorization {
    /// Shape `(row extents..., r)`, orthonormal columns.
    pub left_factor: DenseTensor,
    pub singular_values: Vec<f64>,
    /// Shape `(r, column extents...)`, orthonormal rows.
    pub right_factor: DenseTensor,
    /// Dropped squared singular values over the total, in `[0, 1]`.
    pub discarded_weight: f64,
}

impl TruncatedFactorization {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `left * diag(s)`, keeping the left factor's shape.
    pub fn left_weighted(&self) -> DenseTensor {
        let mut out = self.left_factor.clone();
        let r = self.rank();
        for (i, z) in out.data.iter_mut().enumerate() {
            *z *= self.singular_values[i % r];
        }
        out
    }

    /// `diag(s) * right`, keeping the right factor's shape.
    pub fn right_weighted(&self) -> DenseTensor {
        let mut out = self.right_factor.clone();
        let cols = out.len() / self.rank().max(1);
        for (i, z) in out.data.iter_mut().enumerate() {
            *z *= self.singular_values[i / cols];
        }
        out
    }
}

struct Split {
    perm: Vec<usize>,
    row_shape: Vec<usize>,
    col_shape: Vec<usize>,
}

fn split(t: &DenseTensor, row_axes: &[usize]) -> Result<Split> {
    let rank = t.rank();
    if row_axes.is_empty() || row_axes.len() >= rank {
        return Err(Error::InvalidSplit(format!(
            "row axes {row_axes:?} must be a non-empty proper subset of {rank} axes"
        )));
    }
    let mut is_row = vec![false; rank];
    for &a in row_axes {
        if a >= rank {
            return Err(Error::AxisOutOfRange { axis: a, rank });
        }
        if is_row[a] {
            return Err(Error::InvalidSplit(format!("axis {a} repeated")));
        }
        is_row[a] = true;
    }
    let col_axes: Vec<usize> = (0..rank).filter(|&a| !is_row[a]).collect();
    Ok(Split {
        perm: row_axes.iter().chain(&col_axes).copied().collect(),
        row_shape: row_axes.iter().map(|&a| t.shape[a]).collect(),
        col_shape: col_axes.iter().map(|&a| t.shape[a]).collect(),
    })
}

/// Truncation rank for descending singular values: the smallest rank whose
/// discarded squared weight fraction is within `rel_tol`, capped at `max_rank`,
/// never keeping values under the noise floor. Returns `(rank, discarded)`.
pub(crate) fn truncation_rank(s: &[f64], max_rank: usize, rel_tol: f64) -> (usize, f64) {
    if s.is_empty() || s[0] == 0.0 {
        return (1.min(s.len()), 0.0);
    }
    // values under the floor are numerical zeros: dropped and not counted
    let floor = NOISE_FLOOR * s[0];
    let s = &s[..s.iter().take_while(|&&x| x > floor).count().max(1)];
    let total: f64 = s.iter().map(|x| x * x).sum();
    // tail[r] = sum of s_i^2 for i >= r
    let mut tail = vec![0.0; s.len() + 1];
    for i in (0..s.len()).rev() {
        tail[i] = tail[i + 1] + s[i] * s[i];
    }
    let r = (1..=s.len())
        .find(|&r| tail[r] / total <= rel_tol)
        .unwrap_or(s.len())
        .min(max_rank.max(1));
    (r, (tail[r] / total).clamp(0.0, 1.0))
}

/// Rank-revealing SVD across the partition `row_axes | remaining axes`.
pub fn svd_truncate(
    t: &DenseTensor,
    row_axes: &[usize],
    max_rank: usize,
    rel_tol: f64,
) -> Result<TruncatedFactorization> {
    let sp = split(t, row_axes)?;
    let m: usize = sp.row_shape.iter().product();
    let n: usize = sp.col_shape.iter().product();
    let pt = t.permuted(&sp.perm);
    let svd = linalg::svd_rm(&pt.data, m, n)?;
    let full = svd.s.len();
    let (r, discarded_weight) = truncation_rank(&svd.s, max_rank, rel_tol);

    let mut u = Vec::with_capacity(m * r);
    for i in 0..m {
        u.extend_from_slice(&svd.u[i * full..i * full + r]);
    }
    let vh = svd.vh[..r * n].to_vec();

    let mut left_shape = sp.row_shape;
    left_shape.push(r);
    let mut right_shape = vec![r];
    right_shape.extend(sp.col_shape);
    Ok(TruncatedFactorization {
        left_factor: DenseTensor::new(left_shape, u)?,
        singular_values: svd.s[..r].to_vec(),
        right_factor: DenseTensor::new(right_shape, vh)?,
        discarded_weight,
    })
}

/// Thin QR across `row_axes | remaining axes`: returns `(q, r)` with `q` an
/// isometry of shape `(row extents..., k)` and `r` of shape `(k, column extents...)`.
pub fn qr_orthogonalize(t: &DenseTensor, row_axes: &[usize]) -> Result<(DenseTensor, DenseTensor)> {
    let sp = split(t, row_axes)?;
    let m: usize = sp.row_shape.iter().product();
    let n: usize = sp.col_shape.iter().product();
    let pt = t.permuted(&sp.perm);
    let (q, r) = linalg::qr_rm(&pt.data, m, n)?;
    let k = m.min(n);
    let mut q_shape = sp.row_shape;
    q_shape.push(k);
    let mut r_shape = vec![k];
    r_shape.extend(sp.col_shape);
    Ok((DenseTensor::new(q_shape, q)?, DenseTensor::new(r_shape, r)?))
}

/// Thin LQ across `row_axes | remaining axes`: `(l, q)` with `q` having
/// orthonormal rows, shape `(k, column extents...)`.
pub fn lq_orthogonalize(t: &DenseTensor, row_axes: &[usize]) -> Result<(DenseTensor, DenseTensor)> {
    let sp = split(t, row_axes)?;
    let m: usize = sp.row_shape.iter().product();
    let n: usize = sp.col_shape.iter().product();
    let pt = t.permuted(&sp.perm);
    let (l, q) = linalg::lq_rm(&pt.data, m, n)?;
    let k = m.min(n);
    let mut l_shape = sp.row_shape;
    l_shape.push(k);
    let mut q_shape = vec![k];
    q_shape.extend(sp.col_shape);
    Ok((DenseTensor::new(l_shape, l)?, DenseTensor::new(q_shape, q)?))
}

/// Singular values across `row_axes | remaining axes`, descending.
pub fn singular_values(t: &DenseTensor, row_axes: &[usize]) -> Result<Vec<f64>> {
    let sp = split(t, row_axes)?;
    let m: usize = sp.row_shape.iter().product();
    let n: usize = sp.col_shape.iter().product();
    let pt = t.permuted(&sp.perm);
    linalg::singular_values_rm(&pt.data, m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn sigma_z() -> DenseTensor {
        DenseTensor::from_matrix(2, 2, vec![c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap()
    }

    /// `q^H q` for a matrix-shaped isometry.
    fn gram_cols(t: &DenseTensor) -> DenseTensor {
        contract(&t.conj(), t, &[(0, 0)]).unwrap()
    }

    #[test]
    fn identity_contraction_returns_vector() {
        let v = DenseTensor::new(vec![2], vec![C64::new(0.3, -1.0), c(2.0)]).unwrap();
        let out = contract(&DenseTensor::identity(2), &v, &[(1, 0)]).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn pauli_z_squares_to_identity() {
        let out = contract(&sigma_z(), &sigma_z(), &[(1, 0)]).unwrap();
        assert_eq!(out, DenseTensor::identity(2));
    }

    #[test]
    fn matrix_product_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(vec![2, 3], &mut rng);
        let b = random(vec![3, 4], &mut rng);
        let out = contract(&a, &b, &[(1, 0)]).unwrap();
        assert_eq!(out.shape(), &[2, 4]);
        for i in 0..2 {
            for j in 0..4 {
                let mut want = C64::new(0.0, 0.0);
                for k in 0..3 {
                    want += a.get(&[i, k]) * b.get(&[k, j]);
                }
                assert!((out.get(&[i, j]) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn multi_axis_contraction_matches_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(vec![3, 2, 4], &mut rng);
        let b = random(vec![4, 5, 3], &mut rng);
        let out = contract(&a, &b, &[(0, 2), (2, 0)]).unwrap();
        assert_eq!(out.shape(), &[2, 5]);
        for i in 0..2 {
            for j in 0..5 {
                let mut want = C64::new(0.0, 0.0);
                for x in 0..3 {
                    for y in 0..4 {
                        want += a.get(&[x, i, y]) * b.get(&[y, j, x]);
                    }
                }
                assert!((out.get(&[i, j]) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn contraction_errors() {
        let a = DenseTensor::zeros(vec![2, 3]);
        let b = DenseTensor::zeros(vec![2, 3]);
        assert!(matches!(contract(&a, &b, &[(1, 0)]), Err(Error::ExtentMismatch { .. })));
        assert!(matches!(contract(&a, &b, &[(2, 0)]), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn contraction_matches_index_sums() {
        // pairs in every order, so every layout path runs
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(vec![2, 3, 4], &mut rng);
        let b = random(vec![4, 5, 3], &mut rng);
        for pairs in [[(1, 2), (2, 0)], [(2, 0), (1, 2)]] {
            let got = contract(&a, &b, &pairs).unwrap();
            assert_eq!(got.shape(), &[2, 5]);
            for i in 0..2 {
                for j in 0..5 {
                    let want: C64 = (0..3)
                        .flat_map(|x| (0..4).map(move |y| (x, y)))
                        .map(|(x, y)| a.get(&[i, x, y]) * b.get(&[y, j, x]))
                        .sum();
                    assert!((got.get(&[i, j]) - want).norm() < 1e-12);
                }
            }
        }
        let real = DenseTensor::from_fn(vec![3, 2], |i| c((i[0] * 2 + i[1]) as f64));
        let t = contract(&real, &a, &[(0, 1)]).unwrap();
        assert_eq!(t.shape(), &[2, 2, 4]);
        let want: C64 = (0..3).map(|x| real.get(&[x, 1]) * a.get(&[0, x, 3])).sum();
        assert!((t.get(&[1, 0, 3]) - want).norm() < 1e-12);
    }

    #[test]
    fn permute_matches_index_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random(vec![2, 3, 4, 5], &mut rng);
        let p = t.permute(&[2, 0, 3, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 5, 3]);
        for a in 0..2 {
            for b in 0..3 {
                for cc in 0..4 {
                    for d in 0..5 {
                        assert_eq!(p.get(&[cc, a, d, b]), t.get(&[a, b, cc, d]));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_one_outer_product_has_rank_one() {
        let u = [c(1.0), C64::new(0.5, 0.5), c(-2.0)];
        let v = [c(0.3), c(-1.0), C64::new(0.0, 2.0), c(4.0)];
        let t = DenseTensor::from_fn(vec![3, 4], |i| u[i[0]] * v[i[1]]);
        for tol in [0.0, 1e-8, 0.5] {
            let f = svd_truncate(&t, &[0], 10, tol).unwrap();
            assert_eq!(f.rank(), 1);
            assert_eq!(f.discarded_weight, 0.0);
        }
    }

    #[test]
    fn full_rank_svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random(vec![8, 8], &mut rng);
        let f = svd_truncate(&t, &[0], 8, 0.0).unwrap();
        assert_eq!(f.rank(), 8);
        let back = contract(&f.left_weighted(), &f.right_factor, &[(1, 0)]).unwrap();
        assert!(back.max_abs_diff(&t) < 1e-12);
        let g = gram_cols(&f.left_factor);
        assert!(g.max_abs_diff(&DenseTensor::identity(8)) < 1e-12);
    }

    #[test]
    fn diagonal_truncation_weight() {
        // oracle: s = (1, 0.1, 0.01); keeping 2 drops 1e-4 of 1.0101
        let t = DenseTensor::from_fn(vec![3, 3], |i| {
            if i[0] == i[1] {
                c([1.0, 0.1, 0.01][i[0]])
            } else {
                c(0.0)
            }
        });
        let f = svd_truncate(&t, &[0], 3, 1e-3).unwrap();
        assert_eq!(f.rank(), 2);
        let want = 1e-4 / (1.0 + 1e-2 + 1e-4);
        assert!((f.discarded_weight - want).abs() < 1e-15);
    }

    #[test]
    fn truncation_error_matches_discarded_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random(vec![4, 3, 6], &mut rng);
        let f = svd_truncate(&t, &[0, 2], 2, 0.0).unwrap();
        assert_eq!(f.left_factor.shape(), &[4, 6, 2]);
        assert_eq!(f.right_factor.shape(), &[2, 3]);
        let back = contract(&f.left_weighted(), &f.right_factor, &[(2, 0)])
            .unwrap()
            .permute(&[0, 2, 1])
            .unwrap();
        let diff = back.add(&t.scaled(c(-1.0))).unwrap();
        let predicted = f.discarded_weight.sqrt() * t.norm();
        assert!((diff.norm() - predicted).abs() < 1e-10);
    }

    #[test]
    fn noise_floor_drops_tiny_values() {
        let (r, _) = truncation_rank(&[1.0, 1e-15, 1e-16], 10, 0.0);
        assert_eq!(r, 1);
        let (r, w) = truncation_rank(&[0.0, 0.0], 10, 0.0);
        assert_eq!((r, w), (1, 0.0));
    }

    #[test]
    fn qr_is_isometry_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random(vec![3, 2, 5], &mut rng);
        let (q, r) = qr_orthogonalize(&t, &[0, 1]).unwrap();
        assert_eq!(q.shape(), &[3, 2, 5]);
        let back = contract(&q, &r, &[(2, 0)]).unwrap();
        assert!(back.max_abs_diff(&t) < 1e-12);
        let qm = q.reshape(vec![6, 5]).unwrap();
        assert!(gram_cols(&qm).max_abs_diff(&DenseTensor::identity(5)) < 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut t = DenseTensor::identity(3);
        t.set(&[1, 2], C64::new(f64::NAN, 0.0));
        assert!(matches!(svd_truncate(&t, &[0], 3, 0.0), Err(Error::NonFinite(_))));
        assert!(matches!(qr_orthogonalize(&t, &[0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn bad_partitions_are_rejected() {
        let t = DenseTensor::zeros(vec![2, 2]);
        assert!(svd_truncate(&t, &[], 2, 0.0).is_err());
        assert!(svd_truncate(&t, &[0, 1], 2, 0.0).is_err());
        assert!(qr_orthogonalize(&t, &[0, 0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tensor(shape: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
            let len: usize = shape.iter().product();
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |v| {
                DenseTensor::new(shape.clone(), v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
                    .unwrap()
            })
        }

        proptest! {
            #[test]
            fn contraction_is_bilinear(a in tensor(vec![3, 4]), b in tensor(vec![4, 2]),
                                       re in -2.0f64..2.0, im in -2.0f64..2.0) {
                let alpha = C64::new(re, im);
                let lhs = contract(&a.scaled(alpha), &b, &[(1, 0)]).unwrap();
                let rhs = contract(&a, &b, &[(1, 0)]).unwrap().scaled(alpha);
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }

            #[test]
            fn full_svd_is_lossless(t in tensor(vec![5, 3])) {
                let f = svd_truncate(&t, &[0], 3, 0.0).unwrap();
                let back = contract(&f.left_weighted(), &f.right_factor, &[(1, 0)]).unwrap();
                prop_assert!(back.add(&t.scaled(C64::new(-1.0, 0.0))).unwrap().norm() < 1e-12);
            }

            #[test]
            fn discarded_weight_matches_norm_deficit(t in tensor(vec![6, 5]), keep in 1usize..5) {
                let f = svd_truncate(&t, &[0], keep, 0.0).unwrap();
                let kept: f64 = f.singular_values.iter().map(|s| s * s).sum();
                let deficit = 1.0 - kept / t.norm_sqr();
                prop_assert!((deficit - f.discarded_weight).abs() < 1e-12);
                prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn random_fill_is_used() {
        // guards against accidentally constant random tensors in the tests above
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random(vec![4], &mut rng);
        let x: f64 = rng.gen();
        assert!(t.norm() > 0.0 && x.is_finite());
    }
}
