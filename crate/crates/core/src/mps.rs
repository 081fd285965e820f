//! Matrix product states and operators on open chains.
//!
//! Site tensors of an [`MpsVector`] have axes `(left, phys, right)`; those of
//! an [`MpoOperator`] have axes `(left, out, in, right)`. Dense conversions
//! order the chain most-significant-site first.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{contract, lq_orthogonalize, qr_orthogonalize, singular_values, svd_truncate, DenseTensor};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct MpsVector {
    sites: Vec<DenseTensor>,
    phys_dim: usize,
    center: Option<usize>,
}

impl MpsVector {
    pub fn new(sites: Vec<DenseTensor>, phys_dim: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::DimensionMismatch("empty chain".into()));
        }
        for (i, t) in sites.iter().enumerate() {
            if t.rank() != 3 || t.shape()[1] != phys_dim {
                return Err(Error::DimensionMismatch(format!(
                    "site {i} has shape {:?}, expected (left, {phys_dim}, right)",
                    t.shape()
                )));
            }
        }
        check_bonds(sites.iter().map(|t| (t.shape()[0], t.shape()[2])))?;
        Ok(Self {
            sites,
            phys_dim,
            center: None,
        })
    }

    /// Bond-1 state from one local vector per site.
    pub fn product(local: &[Vec<C64>]) -> Result<Self> {
        let d = local.first().map(Vec::len).unwrap_or(0);
        let sites = local
            .iter()
            .map(|v| DenseTensor::new(vec![1, v.len(), 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites, d)
    }

    /// Exact (or truncated) MPS form of a dense vector of length `d^n`.
    pub fn from_dense(data: &[C64], phys_dim: usize, n: usize, max_bond: usize, rel_tol: f64) -> Result<Self> {
        let len = phys_dim.pow(n as u32);
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "dense vector of length {} for {n} sites of dimension {phys_dim}",
                data.len()
            )));
        }
        let mut sites = Vec::with_capacity(n);
        let mut rest = DenseTensor::new(vec![1, len], data.to_vec())?;
        let mut left = 1;
        for _ in 0..n - 1 {
            let cols = rest.len() / (left * phys_dim);
            let t = rest.reshape(vec![left, phys_dim, cols])?;
            let f = svd_truncate(&t, &[0, 1], max_bond, rel_tol)?;
            left = f.rank();
            sites.push(f.left_factor.clone());
            rest = f.right_weighted().reshape(vec![left, cols])?;
        }
        sites.push(rest.reshape(vec![left, phys_dim, 1])?);
        let mut v = Self::new(sites, phys_dim)?;
        v.center = Some(n - 1);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.center
    }

    /// Replaces a site tensor; clears the canonical bookkeeping.
    pub fn set_site(&mut self, i: usize, t: DenseTensor) -> Result<()> {
        if i >= self.len() {
            return Err(Error::SiteOutOfRange { index: i, len: self.len() });
        }
        self.sites[i] = t;
        self.center = None;
        check_bonds(self.sites.iter().map(|t| (t.shape()[0], t.shape()[2])))
    }

    pub(crate) fn from_parts(sites: Vec<DenseTensor>, phys_dim: usize, center: Option<usize>) -> Self {
        Self { sites, phys_dim, center }
    }


    /// Extents of the `len - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn is_real(&self) -> bool {
        self.sites.iter().all(DenseTensor::is_real)
    }

    /// Multiplies the represented vector by `factor`.
    pub fn scale(&mut self, factor: C64) {
        let i = self.center.unwrap_or(0);
        self.sites[i].scale(factor);
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        match self.center {
            Some(c) => self.sites[c].norm_sqr(),
            None => inner(self, self).map(|z| z.re).unwrap_or(f64::NAN),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Moves the orthogonality center to `center`, re-gauging only
    /// what the current bookkeeping requires.
    pub fn move_center(&mut self, center: usize) -> Result<()> {
        let n = self.len();
        if center >= n {
            return Err(Error::SiteOutOfRange { index: center, len: n });
        }
        let (lo, hi) = match self.center {
            Some(c) => (c, c),
            None => (0, n - 1),
        };
        for i in lo..center {
            self.left_orthonormalize(i)?;
        }
        for i in (center + 1..=hi).rev() {
            self.right_orthonormalize(i)?;
        }
        self.center = Some(center);
        Ok(())
    }

    fn left_orthonormalize(&mut self, i: usize) -> Result<()> {
        let (q, r) = qr_orthogonalize(&self.sites[i], &[0, 1])?;
        self.sites[i] = q;
        self.sites[i + 1] = contract(&r, &self.sites[i + 1], &[(1, 0)])?;
        Ok(())
    }

    fn right_orthonormalize(&mut self, i: usize) -> Result<()> {
        let (l, q) = lq_orthogonalize(&self.sites[i], &[0])?;
        self.sites[i] = q;
        self.sites[i - 1] = contract(&self.sites[i - 1], &l, &[(2, 0)])?;
        Ok(())
    }

    /// Dense vector of length `d^len`.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut acc = DenseTensor::new(vec![1, 1], vec![ONE]).expect("scalar");
        for t in &self.sites {
            let next = contract(&acc, t, &[(1, 0)]).expect("bond extents checked at construction");
            let rows = next.shape()[0] * next.shape()[1];
            let cols = next.shape()[2];
            acc = next.reshape(vec![rows, cols]).expect("same length");
        }
        acc.into_data()
    }
}

#[derive(Clone, Debug)]
pub struct MpoOperator {
    sites: Vec<DenseTensor>,
    phys_dim: usize,
}

impl MpoOperator {
    pub fn new(sites: Vec<DenseTensor>, phys_dim: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::DimensionMismatch("empty chain".into()));
        }
        for (i, t) in sites.iter().enumerate() {
            let s = t.shape();
            if t.rank() != 4 || s[1] != phys_dim || s[2] != phys_dim {
                return Err(Error::DimensionMismatch(format!(
                    "operator site {i} has shape {s:?}, expected (left, {phys_dim}, {phys_dim}, right)"
                )));
            }
        }
        check_bonds(sites.iter().map(|t| (t.shape()[0], t.shape()[3])))?;
        Ok(Self { sites, phys_dim })
    }

    pub fn identity(n: usize, phys_dim: usize) -> Self {
        let site = DenseTensor::identity(phys_dim)
            .reshape(vec![1, phys_dim, phys_dim, 1])
            .expect("same length");
        Self {
            sites: vec![site; n],
            phys_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &DenseTensor {
        &self.sites[i]
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiplies the operator by `factor`.
    pub fn scale(&mut self, factor: C64) {
        self.sites[0].scale(factor);
    }

    /// Dense `d^len x d^len` matrix, row-major, rows indexing the output.
    pub fn to_dense(&self) -> Vec<C64> {
        let d = self.phys_dim;
        // acc axes: (out prefix, in prefix, bond)
        let mut acc = DenseTensor::new(vec![1, 1, 1], vec![ONE]).expect("scalar");
        for w in &self.sites {
            let t = contract(&acc, w, &[(2, 0)]).expect("bond extents checked at construction");
            // (o, i, s, t, r) -> (o, s, i, t, r)
            let (o, i, r) = (t.shape()[0], t.shape()[1], t.shape()[4]);
            acc = t
                .permute(&[0, 2, 1, 3, 4])
                .and_then(|p| p.reshape(vec![o * d, i * d, r]))
                .expect("same length");
        }
        acc.into_data()
    }
}

fn check_bonds(bonds: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    let bonds: Vec<_> = bonds.collect();
    if bonds[0].0 != 1 || bonds[bonds.len() - 1].1 != 1 {
        return Err(Error::DimensionMismatch("boundary bonds must have extent 1".into()));
    }
    for (i, w) in bonds.windows(2).enumerate() {
        if w[0].1 != w[1].0 {
            return Err(Error::DimensionMismatch(format!(
                "bond {i}: right extent {} does not match left extent {}",
                w[0].1, w[1].0
            )));
        }
    }
    Ok(())
}

fn check_compatible(a: &MpsVector, b: &MpsVector) -> Result<()> {
    if a.len() != b.len() || a.phys_dim != b.phys_dim {
        return Err(Error::DimensionMismatch(format!(
            "chains of ({}, d={}) and ({}, d={})",
            a.len(),
            a.phys_dim,
            b.len(),
            b.phys_dim
        )));
    }
    Ok(())
}

/// Copy of `v` in mixed canonical form around `center`.
pub fn canonicalize(v: &MpsVector, center: usize) -> Result<MpsVector> {
    let mut out = v.clone();
    out.move_center(center)?;
    Ok(out)
}

/// Left-to-right QR pass followed by a right-to-left truncating SVD pass.
/// Returns the compressed vector (center at site 0) and the summed relative
/// discarded weight of all bonds.
pub fn compress(v: &MpsVector, max_bond: usize, rel_tol: f64) -> Result<(MpsVector, f64)> {
    let n = v.len();
    let mut out = canonicalize(v, n - 1)?;
    let mut total = 0.0;
    for i in (1..n).rev() {
        let f = svd_truncate(&out.sites[i], &[0], max_bond, rel_tol)?;
        total += f.discarded_weight;
        out.sites[i] = f.right_factor.clone();
        out.sites[i - 1] = contract(&out.sites[i - 1], &f.left_weighted(), &[(2, 0)])?;
    }
    out.center = Some(0);
    Ok((out, total))
}

/// Exact application; bond extents multiply.
pub fn apply_mpo(o: &MpoOperator, v: &MpsVector) -> Result<MpsVector> {
    if o.len() != v.len() || o.phys_dim != v.phys_dim {
        return Err(Error::DimensionMismatch(format!(
            "operator ({}, d={}) on vector ({}, d={})",
            o.len(),
            o.phys_dim,
            v.len(),
            v.phys_dim
        )));
    }
    let sites = o
        .sites
        .iter()
        .zip(&v.sites)
        .map(|(w, a)| {
            // (wl, s, wr) x (l, r) -> (wl, l, s, wr, r)
            let t = contract(w, a, &[(2, 1)])?.permute(&[0, 3, 1, 2, 4])?;
            let s = t.shape().to_vec();
            t.reshape(vec![s[0] * s[1], s[2], s[3] * s[4]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MpsVector {
        sites,
        phys_dim: v.phys_dim,
        center: None,
    })
}

/// `a† b` as a single operator, compressed without loss (relative singular
/// weights below `1e-24` are dropped).
pub fn adjoint_product(a: &MpoOperator, b: &MpoOperator) -> Result<MpoOperator> {
    if a.len() != b.len() || a.phys_dim != b.phys_dim {
        return Err(Error::DimensionMismatch("operators differ in length or local dimension".into()));
    }
    let d = a.phys_dim;
    let sites = a
        .sites
        .iter()
        .zip(&b.sites)
        .map(|(wa, wb)| {
            // (al, u, ar, bl, t, br) -> (al, bl, u, t, ar, br)
            let t = contract(&wa.conj(), wb, &[(1, 1)])?.permute(&[0, 3, 1, 4, 2, 5])?;
            let s = t.shape().to_vec();
            t.reshape(vec![s[0] * s[1], d * d, s[4] * s[5]])
        })
        .collect::<Result<Vec<_>>>()?;
    let flat = MpsVector {
        sites,
        phys_dim: d * d,
        center: None,
    };
    let (flat, _) = compress(&flat, usize::MAX, 1e-24)?;
    let sites = flat
        .sites
        .into_iter()
        .map(|t| {
            let s = t.shape().to_vec();
            t.reshape(vec![s[0], d, d, s[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    MpoOperator::new(sites, d)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &MpsVector, b: &MpsVector) -> Result<C64> {
    check_compatible(a, b)?;
    // env axes: (bra bond, ket bond)
    let mut env = DenseTensor::new(vec![1, 1], vec![ONE])?;
    for (x, y) in a.sites.iter().zip(&b.sites) {
        let t = contract(&env, y, &[(1, 0)])?;
        env = contract(&x.conj(), &t, &[(0, 0), (1, 1)])?;
    }
    Ok(env.data()[0])
}

/// Concatenates two chains as the direct sum `a + b`.
pub(crate) fn direct_sum(a: &MpsVector, b: &MpsVector) -> Result<MpsVector> {
    check_compatible(a, b)?;
    let n = a.len();
    let d = a.phys_dim;
    if n == 1 {
        return Ok(MpsVector {
            sites: vec![a.sites[0].add(&b.sites[0])?],
            phys_dim: d,
            center: None,
        });
    }
    let sites = (0..n)
        .map(|i| {
            let (x, y) = (&a.sites[i], &b.sites[i]);
            let (xl, xr) = (x.shape()[0], x.shape()[2]);
            let (yl, yr) = (y.shape()[0], y.shape()[2]);
            let first = i == 0;
            let last = i == n - 1;
            let l = if first { 1 } else { xl + yl };
            let r = if last { 1 } else { xr + yr };
            let mut t = DenseTensor::zeros(vec![l, d, r]);
            for p in 0..xl {
                for s in 0..d {
                    for q in 0..xr {
                        t.set(&[p, s, q], x.get(&[p, s, q]));
                    }
                }
            }
            let (lo, ro) = (if first { 0 } else { xl }, if last { 0 } else { xr });
            for p in 0..yl {
                for s in 0..d {
                    for q in 0..yr {
                        t.set(&[lo + p, s, ro + q], y.get(&[p, s, q]));
                    }
                }
            }
            t
        })
        .collect();
    Ok(MpsVector {
        sites,
        phys_dim: d,
        center: None,
    })
}

/// `sum_j c_j v_j` by pairwise direct sums, compressing whenever the running
/// bond exceeds twice `max_bond` and once at the end. Returns the result and
/// the summed discarded weight.
pub fn linear_combine(terms: &[(C64, &MpsVector)], max_bond: usize, rel_tol: f64) -> Result<(MpsVector, f64)> {
    let (&(c0, v0), rest) = terms
        .split_first()
        .ok_or_else(|| Error::DimensionMismatch("no terms to combine".into()))?;
    let mut acc = v0.scaled(c0);
    let mut weight = 0.0;
    for &(c, v) in rest {
        acc = direct_sum(&acc, &v.scaled(c))?;
        if acc.max_bond() > 2 * max_bond {
            let (next, w) = compress(&acc, max_bond, rel_tol)?;
            acc = next;
            weight += w;
        }
    }
    let (out, w) = compress(&acc, max_bond, rel_tol)?;
    Ok((out, weight + w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    /// Bond index: the cut lies between sites `cut - 1` and `cut`.
    pub cut: usize,
    pub values: Vec<f64>,
}

impl SchmidtSpectrum {
    /// `-sum l^2 log2 l^2`.
    pub fn entropy(&self) -> f64 {
        self.values
            .iter()
            .map(|&l| l * l)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum::<f64>()
            .max(0.0)
    }
}

/// Schmidt coefficients of `v / |v|` across bond `cut` (1 ≤ cut < len).
pub fn schmidt_spectrum(v: &MpsVector, cut: usize) -> Result<SchmidtSpectrum> {
    let n = v.len();
    if cut == 0 || cut >= n {
        return Err(Error::SiteOutOfRange { index: cut, len: n });
    }
    let c = canonicalize(v, cut - 1)?;
    let mut values = singular_values(&c.sites[cut - 1], &[0, 1])?;
    let norm = values.iter().map(|s| s * s).sum::<f64>().sqrt();
    if norm > 0.0 {
        for s in &mut values {
            *s /= norm;
        }
    }
    Ok(SchmidtSpectrum { cut, values })
}

/// Operator-space entanglement entropy (base 2) across bond `cut`.
pub fn osee(v: &MpsVector, cut: usize) -> Result<f64> {
    if v.phys_dim != 4 {
        return Err(Error::DimensionMismatch(format!(
            "entropy of a vectorized operator needs d = 4, got {}",
            v.phys_dim
        )));
    }
    Ok(schmidt_spectrum(v, cut)?.entropy())
}

/// Dense matrix-vector product, row-major `m` of size `len x len`.
pub fn dense_matvec(m: &[C64], v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|i| m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_mps;
    use crate::model::{commutator_mpo, SpinChainModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn dense_dot(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn check_isometries(v: &MpsVector, tol: f64) {
        let c = v.canonical_center().unwrap();
        for (i, t) in v.sites().iter().enumerate() {
            let g = if i < c {
                contract(&t.conj(), t, &[(0, 0), (1, 1)]).unwrap()
            } else if i > c {
                contract(t, &t.conj(), &[(1, 1), (2, 2)]).unwrap()
            } else {
                continue;
            };
            let k = g.shape()[0];
            assert!(g.max_abs_diff(&DenseTensor::identity(k)) < tol, "site {i}");
        }
    }

    #[test]
    fn adjoint_product_matches_dense() {
        let m = SpinChainModel::with_default_couplings(3).unwrap();
        let hc = commutator_mpo(&m);
        let sq = adjoint_product(&hc, &hc).unwrap();
        assert!(sq.max_bond() < hc.max_bond() * hc.max_bond());
        let a = hc.to_dense();
        let dim = 64;
        let want: Vec<C64> = (0..dim * dim)
            .map(|k| (0..dim).map(|l| a[l * dim + k / dim].conj() * a[l * dim + k % dim]).sum())
            .collect();
        for (x, y) in sq.to_dense().iter().zip(&want) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn product_state_overlaps() {
        let z_up = MpsVector::product(&vec![vec![c(1.0), c(0.0)]; 4]).unwrap();
        let z_dn = MpsVector::product(&vec![vec![c(0.0), c(1.0)]; 4]).unwrap();
        assert!((inner(&z_up, &z_up).unwrap() - ONE).norm() < 1e-15);
        assert_eq!(inner(&z_up, &z_dn).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_bra() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_mps(4, 2, 3, &mut rng, false);
        let b = random_mps(4, 2, 2, &mut rng, false);
        let z = C64::new(0.3, 1.7);
        let lhs = inner(&a.scaled(z), &b).unwrap();
        let rhs = z.conj() * inner(&a, &b).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        let dense = dense_dot(&a.to_dense(), &b.to_dense());
        assert!((inner(&a, &b).unwrap() - dense).norm() < 1e-12);
    }

    #[test]
    fn canonicalize_preserves_vector_and_sets_isometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = random_mps(6, 4, 5, &mut rng, false);
        let dense = v.to_dense();
        for center in [0, 2, 5] {
            let c = canonicalize(&v, center).unwrap();
            assert_eq!(c.canonical_center(), Some(center));
            assert!(rel_diff(&c.to_dense(), &dense) < 1e-12);
            check_isometries(&c, 1e-10);
            let mut moved = c.clone();
            moved.move_center((center + 3) % 6).unwrap();
            check_isometries(&moved, 1e-10);
            assert!(rel_diff(&moved.to_dense(), &dense) < 1e-12);
        }
    }

    #[test]
    fn compress_product_state_is_lossless() {
        let v = MpsVector::product(&vec![vec![c(0.6), C64::new(0.0, 0.8)]; 5]).unwrap();
        let (out, w) = compress(&v, 3, 1e-8).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(out.bond_dims(), vec![1; 4]);
        assert!(rel_diff(&out.to_dense(), &v.to_dense()) < 1e-14);
    }

    #[test]
    fn compress_without_truncation_keeps_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let v = random_mps(6, 2, 8, &mut rng, false);
        let (out, w) = compress(&v, 8, 0.0).unwrap();
        let ov = inner(&v, &out).unwrap() / v.norm_sqr();
        assert!((ov - ONE).norm() < 1e-12);
        assert!(w < 1e-12);
        check_isometries(&out, 1e-10);
    }

    #[test]
    fn compress_error_bounded_by_discarded_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for bond in [1, 2, 3, 5] {
            let v = random_mps(7, 2, 6, &mut rng, true);
            let (out, w) = compress(&v, bond, 0.0).unwrap();
            assert!(out.max_bond() <= bond);
            let ov = inner(&v, &out).unwrap().re / v.norm_sqr();
            assert!((1.0 - ov).abs() <= w + 1e-10, "bond {bond}: {ov} vs {w}");
        }
    }

    #[test]
    fn apply_mpo_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = random_mps(4, 2, 3, &mut rng, false);
        let mut sites = Vec::new();
        for i in 0..4 {
            let l = if i == 0 { 1 } else { 2 };
            let r = if i == 3 { 1 } else { 2 };
            sites.push(DenseTensor::from_fn(vec![l, 2, 2, r], |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }));
        }
        let o = MpoOperator::new(sites, 2).unwrap();
        let got = apply_mpo(&o, &v).unwrap().to_dense();
        let want = dense_matvec(&o.to_dense(), &v.to_dense());
        assert!(rel_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn identity_mpo_leaves_vector_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let v = random_mps(5, 4, 3, &mut rng, false);
        let out = apply_mpo(&MpoOperator::identity(5, 4), &v).unwrap();
        let ov = inner(&v, &out).unwrap() / (v.norm() * out.norm());
        assert!((ov - ONE).norm() < 1e-12);
    }

    #[test]
    fn linear_combine_matches_dense_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let a = random_mps(5, 2, 2, &mut rng, false);
        let b = random_mps(5, 2, 3, &mut rng, false);
        let e = random_mps(5, 2, 1, &mut rng, false);
        let (ca, cb, ce) = (C64::new(2.0, 0.0), C64::new(-1.0, 0.5), C64::new(0.0, 1.0));
        let (sum, w) = linear_combine(&[(ca, &a), (cb, &b), (ce, &e)], 64, 0.0).unwrap();
        assert!(w < 1e-12);
        let want: Vec<C64> = a
            .to_dense()
            .iter()
            .zip(b.to_dense())
            .zip(e.to_dense())
            .map(|((x, y), z)| ca * x + cb * y + ce * z)
            .collect();
        assert!(rel_diff(&sum.to_dense(), &want) < 1e-12);
    }

    #[test]
    fn from_dense_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let data: Vec<C64> = (0..256).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let v = MpsVector::from_dense(&data, 4, 4, 1000, 0.0).unwrap();
        assert!(rel_diff(&v.to_dense(), &data) < 1e-12);
        assert_eq!(v.bond_dims(), vec![4, 16, 4]);
    }

    #[test]
    fn schmidt_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let v = random_mps(6, 2, 4, &mut rng, false);
        let dense = v.to_dense();
        let norm = dense.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let m = DenseTensor::from_matrix(8, 8, dense.iter().map(|z| z / norm).collect()).unwrap();
        let want = singular_values(&m, &[0]).unwrap();
        let got = schmidt_spectrum(&v, 3).unwrap();
        let total: f64 = got.values.iter().map(|s| s * s).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for (a, b) in got.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn osee_of_product_operators_vanishes() {
        let id = MpsVector::product(&vec![vec![c(1.0), c(0.0), c(0.0), c(1.0)]; 6]).unwrap();
        let proj = MpsVector::product(&vec![vec![c(1.0), c(0.0), c(0.0), c(0.0)]; 6]).unwrap();
        for cut in 1..6 {
            assert!(osee(&id, cut).unwrap().abs() < 1e-14);
            assert!(osee(&proj, cut).unwrap().abs() < 1e-14);
        }
        assert!(osee(&MpsVector::product(&vec![vec![c(1.0), c(0.0)]; 3]).unwrap(), 1).is_err());
    }

    #[test]
    fn mismatched_chains_are_rejected() {
        let a = MpsVector::product(&vec![vec![c(1.0), c(0.0)]; 3]).unwrap();
        let b = MpsVector::product(&vec![vec![c(1.0), c(0.0)]; 4]).unwrap();
        assert!(inner(&a, &b).is_err());
        assert!(apply_mpo(&MpoOperator::identity(3, 4), &a).is_err());
        let bad = DenseTensor::zeros(vec![2, 2, 1]);
        assert!(MpsVector::new(vec![bad], 2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn osee_invariant_under_gauge(seed in 0u64..1000, center in 0usize..5, cut in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = random_mps(5, 4, 3, &mut rng, false);
                let s0 = osee(&v, cut).unwrap();
                let s1 = osee(&canonicalize(&v, center).unwrap(), cut).unwrap();
                let (lossless, _) = compress(&v, 64, 0.0).unwrap();
                let s2 = osee(&lossless, cut).unwrap();
                prop_assert!((s0 - s1).abs() < 1e-10);
                prop_assert!((s0 - s2).abs() < 1e-10);
                prop_assert!(s0 >= 0.0);
            }

            #[test]
            fn real_vectors_have_real_positive_norm(seed in 0u64..1000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = random_mps(5, 2, 3, &mut rng, true);
                let z = inner(&v, &v).unwrap();
                prop_assert!(z.im == 0.0);
                prop_assert!(z.re > 0.0);
            }

            #[test]
            fn compress_overlap_within_weight(seed in 0u64..1000, bond in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = random_mps(6, 2, 5, &mut rng, false);
                let (out, w) = compress(&v, bond, 0.0).unwrap();
                let ov = inner(&out, &v).unwrap() / v.norm_sqr();
                prop_assert!((ONE - ov).norm() <= w + 1e-10);
            }
        }
    }
}
