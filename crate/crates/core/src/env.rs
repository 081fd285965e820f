//! Transfer-matrix environments for overlaps of the form `<A a | B b>` and the
//! variational fitting of operator-weighted sums of chains.
//!
//! Environments are rank-4 tensors with axes `(bra bond, bra-operator bond,
//! ket-operator bond, ket bond)`; an absent operator contributes an extent-1 axis.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mps::{adjoint_product, apply_mpo, compress, direct_sum, MpoOperator, MpsVector};
use crate::tensor::{contract, lq_orthogonalize, qr_orthogonalize, svd_truncate, DenseTensor};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn unit_env() -> DenseTensor {
    DenseTensor::new(vec![1, 1, 1, 1], vec![ONE]).expect("scalar")
}

/// Extends a left environment by one site. `bra` is conjugated here.
pub(crate) fn left_step(
    env: &DenseTensor,
    bra: &DenseTensor,
    bra_op: Option<&DenseTensor>,
    ket_op: Option<&DenseTensor>,
    ket: &DenseTensor,
) -> Result<DenseTensor> {
    // (x, a, b, t, y')
    let t1 = contract(env, ket, &[(3, 0)])?;
    // -> (x, a, y', s, b')
    let t2 = match ket_op {
        Some(w) => contract(&t1, w, &[(2, 0), (3, 2)])?,
        None => t1.permute(&[0, 1, 4, 3, 2])?,
    };
    // -> (x, y', b', u, a')
    let t3 = match bra_op {
        Some(w) => contract(&t2, &w.conj(), &[(1, 0), (3, 1)])?,
        None => t2.permute(&[0, 2, 4, 3, 1])?,
    };
    // -> (x', y', b', a')
    let t4 = contract(&bra.conj(), &t3, &[(0, 0), (1, 3)])?;
    t4.permute(&[0, 3, 2, 1])
}

/// Extends a right environment by one site.
pub(crate) fn right_step(
    env: &DenseTensor,
    bra: &DenseTensor,
    bra_op: Option<&DenseTensor>,
    ket_op: Option<&DenseTensor>,
    ket: &DenseTensor,
) -> Result<DenseTensor> {
    // (y, t, x', a', b')
    let t1 = contract(ket, env, &[(2, 3)])?;
    // -> (y, x', a', b, s)
    let t2 = match ket_op {
        Some(w) => contract(&t1, w, &[(1, 2), (4, 3)])?,
        None => t1.permute(&[0, 2, 3, 4, 1])?,
    };
    // -> (y, x', b, a, u)
    let t3 = match bra_op {
        Some(w) => contract(&t2, &w.conj(), &[(2, 3), (4, 1)])?,
        None => t2.permute(&[0, 1, 3, 2, 4])?,
    };
    // -> (x, y, b, a)
    let t4 = contract(&bra.conj(), &t3, &[(1, 4), (2, 1)])?;
    t4.permute(&[0, 3, 2, 1])
}

fn check_lengths(n: usize, what: &[(Option<&MpoOperator>, &MpsVector)]) -> Result<()> {
    for (op, v) in what {
        if v.len() != n || op.is_some_and(|o| o.len() != n || o.phys_dim() != v.phys_dim()) {
            return Err(Error::DimensionMismatch("chain lengths or local dimensions differ".into()));
        }
    }
    Ok(())
}

/// `<A a | B b>` with optional operators on each side.
pub fn overlap(
    a: &MpsVector,
    op_a: Option<&MpoOperator>,
    op_b: Option<&MpoOperator>,
    b: &MpsVector,
) -> Result<C64> {
    let n = a.len();
    check_lengths(n, &[(op_a, a), (op_b, b)])?;
    if a.phys_dim() != b.phys_dim() {
        return Err(Error::DimensionMismatch("local dimensions differ".into()));
    }
    let mut env = unit_env();
    for i in 0..n {
        env = left_step(
            &env,
            a.site(i),
            op_a.map(|o| o.site(i)),
            op_b.map(|o| o.site(i)),
            b.site(i),
        )?;
    }
    Ok(env.data()[0])
}

/// One summand `coeff * op |vec>` of a fitting target.
#[derive(Clone, Copy, Debug)]
pub struct Term<'a> {
    pub coeff: C64,
    pub op: Option<&'a MpoOperator>,
    pub vec: &'a MpsVector,
}

impl<'a> Term<'a> {
    pub fn plain(coeff: C64, vec: &'a MpsVector) -> Self {
        Self { coeff, op: None, vec }
    }

    pub fn applied(coeff: C64, op: &'a MpoOperator, vec: &'a MpsVector) -> Self {
        Self { coeff, op: Some(op), vec }
    }

    fn bond(&self, i: usize) -> usize {
        self.vec.bond_dims()[i] * self.op.map_or(1, |o| o.bond_dims()[i])
    }
}

/// `|| sum_j c_j O_j v_j ||^2`.
pub fn sum_norm_sqr(terms: &[Term<'_>]) -> Result<f64> {
    let mut total = 0.0;
    for (j, tj) in terms.iter().enumerate() {
        for tk in &terms[j..] {
            // one fused operator keeps the intermediates small
            let ov = match (tj.op, tk.op) {
                (Some(a), Some(b)) => overlap(tj.vec, None, Some(&adjoint_product(a, b)?), tk.vec)?,
                (a, b) => overlap(tj.vec, a, b, tk.vec)?,
            };
            let z = tj.coeff.conj() * tk.coeff * ov;
            total += if std::ptr::eq(tj, tk) { z.re } else { 2.0 * z.re };
        }
    }
    Ok(total.max(0.0))
}

/// How a variational fit reaches bonds larger than its guess.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondGrowth {
    /// Widen the guess with weak noise, fit one site at a time, then compress
    /// under `rel_tol`; repeated while the widened bonds are all used.
    Padding,
    /// Two-site updates on the first pair of half-sweeps, one-site after.
    TwoSite,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_bond: usize,
    pub rel_tol: f64,
    /// Targets whose exact direct-sum bond (capped by the local Hilbert
    /// space) stays within this limit are built exactly and compressed.
    pub exact_bond_limit: usize,
    pub min_half_sweeps: usize,
    pub max_half_sweeps: usize,
    /// Stop once a half-sweep improves the residual by less than this fraction.
    pub improvement: f64,
    pub growth: BondGrowth,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_bond: 64,
            rel_tol: 1e-8,
            exact_bond_limit: 256,
            min_half_sweeps: 2,
            max_half_sweeps: 6,
            improvement: 0.1,
            growth: BondGrowth::Padding,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub vec: MpsVector,
    /// Relative squared-norm deficit `1 - |x|^2 / |target|^2`.
    pub discarded_weight: f64,
    pub exact: bool,
    pub half_sweeps: usize,
}

/// Largest bond the `d`-dimensional chain can support at each cut.
pub(crate) fn hilbert_caps(n: usize, d: usize) -> Vec<usize> {
    (0..n - 1)
        .map(|i| {
            let k = (i + 1).min(n - 1 - i);
            d.checked_pow(k as u32).unwrap_or(usize::MAX)
        })
        .collect()
}

/// Approximates `sum_j c_j O_j v_j` by a chain with bonds ≤ `max_bond`.
///
/// Small targets are formed exactly and compressed. Larger ones are fitted
/// variationally starting from `guess`, with an optional two-site pass that
/// lets bonds grow up to `max_bond` under `rel_tol`.
pub fn fit_sum(terms: &[Term<'_>], guess: &MpsVector, opts: &FitOptions) -> Result<FitOutcome> {
    let first = terms
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no terms to fit".into()))?;
    let n = first.vec.len();
    let d = first.vec.phys_dim();
    let pairs: Vec<_> = terms.iter().map(|t| (t.op, t.vec)).collect();
    check_lengths(n, &pairs)?;
    check_lengths(n, &[(None, guess)])?;

    let caps = hilbert_caps(n, d);
    let needed: Vec<usize> = (0..n - 1)
        .map(|i| terms.iter().map(|t| t.bond(i)).sum::<usize>().min(caps[i]))
        .collect();
    if needed.iter().all(|&b| b <= opts.exact_bond_limit) || n == 1 {
        return fit_exact(terms, opts);
    }

    let caps: Vec<usize> = needed.iter().map(|&b| b.min(opts.max_bond)).collect();
    let target_sq = sum_norm_sqr(terms)?;
    if target_sq == 0.0 {
        let (vec, _) = compress(&guess.scaled(C64::new(0.0, 0.0)), 1, 0.0)?;
        return Ok(FitOutcome {
            vec,
            discarded_weight: 0.0,
            exact: false,
            half_sweeps: 0,
        });
    }

    if opts.growth == BondGrowth::TwoSite {
        let mut fit = Fitter::new(terms, guess)?;
        let (residual, half_sweeps) = fit.run(opts, target_sq, true)?;
        return Ok(FitOutcome {
            vec: fit.finish(),
            discarded_weight: residual,
            exact: false,
            half_sweeps,
        });
    }

    let mut start = if guess.bond_dims().iter().any(|&b| b > opts.max_bond) {
        compress(guess, opts.max_bond, 0.0)?.0
    } else {
        guess.clone()
    };
    let mut half_sweeps = 0;
    for attempt in 0.. {
        let padded: Vec<usize> = start
            .bond_dims()
            .iter()
            .zip(&caps)
            .map(|(&b, &c)| b.max((b + (b / 8).max(4)).min(c)))
            .collect();
        let mut fit = Fitter::new(terms, &pad_bonds(&start, &padded)?)?;
        let (residual, sweeps) = fit.run(opts, target_sq, false)?;
        half_sweeps += sweeps;
        let x = fit.finish();
        let (vec, w) = compress(&x, opts.max_bond, opts.rel_tol)?;
        let filled = vec
            .bond_dims()
            .iter()
            .zip(&padded)
            .zip(&caps)
            .any(|((&b, &p), &c)| b >= p && p < c);
        if !filled || attempt == MAX_WIDENINGS {
            return Ok(FitOutcome {
                vec,
                discarded_weight: residual + w * (1.0 - residual),
                exact: false,
                half_sweeps,
            });
        }
        start = x;
    }
    unreachable!("the widening loop returns")
}

/// Extra widening rounds when a padded fit uses every added direction.
const MAX_WIDENINGS: usize = 3;

/// `v` with bonds enlarged to `bonds`; new entries get weak deterministic
/// noise so that sweeps can rotate into them.
fn pad_bonds(v: &MpsVector, bonds: &[usize]) -> Result<MpsVector> {
    let n = v.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let sites = (0..n)
        .map(|i| {
            let t = v.site(i);
            let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            let nl = if i == 0 { 1 } else { bonds[i - 1] };
            let nr = if i == n - 1 { 1 } else { bonds[i] };
            if (nl, nr) == (l, r) {
                return t.clone();
            }
            let scale = 1e-3 * (t.norm_sqr() / t.len() as f64).sqrt().max(1e-300);
            DenseTensor::from_fn(vec![nl, d, nr], |idx| {
                if idx[0] < l && idx[2] < r {
                    t.get(&[idx[0], idx[1], idx[2]])
                } else {
                    C64::new(scale * rng.gen_range(-1.0..1.0), 0.0)
                }
            })
        })
        .collect::<Vec<_>>();
    MpsVector::new(sites, v.phys_dim())
}

fn fit_exact(terms: &[Term<'_>], opts: &FitOptions) -> Result<FitOutcome> {
    let mut acc: Option<MpsVector> = None;
    for t in terms {
        let mut v = match t.op {
            Some(o) => apply_mpo(o, t.vec)?,
            None => t.vec.clone(),
        };
        v.scale(t.coeff);
        acc = Some(match acc {
            None => v,
            Some(a) => direct_sum(&a, &v)?,
        });
    }
    let (vec, w) = compress(&acc.expect("at least one term"), opts.max_bond, opts.rel_tol)?;
    Ok(FitOutcome {
        vec,
        discarded_weight: w,
        exact: true,
        half_sweeps: 0,
    })
}

struct Fitter<'t, 'a> {
    terms: &'t [Term<'a>],
    x: Vec<DenseTensor>,
    d: usize,
    // per term: left[i] covers sites < i, right[i] covers sites > i
    left: Vec<Vec<DenseTensor>>,
    right: Vec<Vec<DenseTensor>>,
}

impl<'t, 'a> Fitter<'t, 'a> {
    fn new(terms: &'t [Term<'a>], guess: &MpsVector) -> Result<Self> {
        let n = guess.len();
        let mut g = guess.clone();
        g.move_center(0)?;
        let x = g.sites().to_vec();
        let mut fit = Self {
            terms,
            x,
            d: guess.phys_dim(),
            left: vec![vec![unit_env(); n]; terms.len()],
            right: vec![vec![unit_env(); n]; terms.len()],
        };
        for i in (1..n).rev() {
            fit.update_right(i)?;
        }
        Ok(fit)
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    fn update_left(&mut self, i: usize) -> Result<()> {
        for (j, t) in self.terms.iter().enumerate() {
            self.left[j][i + 1] = left_step(
                &self.left[j][i],
                &self.x[i],
                None,
                t.op.map(|o| o.site(i)),
                t.vec.site(i),
            )?;
        }
        Ok(())
    }

    fn update_right(&mut self, i: usize) -> Result<()> {
        for (j, t) in self.terms.iter().enumerate() {
            self.right[j][i - 1] = right_step(
                &self.right[j][i],
                &self.x[i],
                None,
                t.op.map(|o| o.site(i)),
                t.vec.site(i),
            )?;
        }
        Ok(())
    }

    /// Projection of the target onto site `i`, shape `(left, d, right)`.
    fn one_site_target(&self, i: usize) -> Result<DenseTensor> {
        let mut out: Option<DenseTensor> = None;
        for (j, t) in self.terms.iter().enumerate() {
            // (x, a, b, t, y')
            let t1 = contract(&self.left[j][i], t.vec.site(i), &[(3, 0)])?;
            // -> (x, a, y', s, b')
            let t2 = match t.op {
                Some(o) => contract(&t1, o.site(i), &[(2, 0), (3, 2)])?,
                None => t1.permute(&[0, 1, 4, 3, 2])?,
            };
            // -> (x, s, x')
            let mut t3 = contract(&t2, &self.right[j][i], &[(1, 1), (2, 3), (4, 2)])?;
            t3.scale(t.coeff);
            out = Some(match out {
                None => t3,
                Some(acc) => acc.add(&t3)?,
            });
        }
        Ok(out.expect("at least one term"))
    }

    /// Projection onto sites `i, i+1`, shape `(left, d, d, right)`.
    fn two_site_target(&self, i: usize) -> Result<DenseTensor> {
        let mut out: Option<DenseTensor> = None;
        for (j, t) in self.terms.iter().enumerate() {
            let t1 = contract(&self.left[j][i], t.vec.site(i), &[(3, 0)])?;
            // (x, a, y', s, b')
            let t2 = match t.op {
                Some(o) => contract(&t1, o.site(i), &[(2, 0), (3, 2)])?,
                None => t1.permute(&[0, 1, 4, 3, 2])?,
            };
            // (x, a, s, b', t', y'')
            let t3 = contract(&t2, t.vec.site(i + 1), &[(2, 0)])?;
            // -> (x, a, s, y'', s', b'')
            let t4 = match t.op {
                Some(o) => contract(&t3, o.site(i + 1), &[(3, 0), (4, 2)])?,
                None => t3.permute(&[0, 1, 2, 5, 4, 3])?,
            };
            // -> (x, s, s', x')
            let mut t5 = contract(&t4, &self.right[j][i + 1], &[(1, 1), (3, 3), (5, 2)])?;
            t5.scale(t.coeff);
            out = Some(match out {
                None => t5,
                Some(acc) => acc.add(&t5)?,
            });
        }
        Ok(out.expect("at least one term"))
    }

    /// Left-to-right pass ending with the center on the last site. Returns `|x|^2`.
    fn sweep_right(&mut self, two_site: bool, opts: &FitOptions) -> Result<f64> {
        let n = self.n();
        for i in 0..n - 1 {
            if two_site {
                let theta = self.two_site_target(i)?;
                let f = svd_truncate(&theta, &[0, 1], opts.max_bond, opts.rel_tol)?;
                self.x[i] = f.left_factor.clone();
                let r = f.rank();
                let right = f.right_weighted();
                let s = right.shape().to_vec();
                self.x[i + 1] = right.reshape(vec![r, s[1], s[2]])?;
            } else {
                let target = self.one_site_target(i)?;
                let (q, r) = qr_orthogonalize(&target, &[0, 1])?;
                self.x[i] = q;
                self.x[i + 1] = contract(&r, &self.x[i + 1], &[(1, 0)])?;
            }
            self.update_left(i)?;
        }
        let last = self.one_site_target(n - 1)?;
        let norm_sq = last.norm_sqr();
        self.x[n - 1] = last;
        Ok(norm_sq)
    }

    /// Right-to-left pass ending with the center on site 0. Returns `|x|^2`.
    fn sweep_left(&mut self, two_site: bool, opts: &FitOptions) -> Result<f64> {
        let n = self.n();
        for i in (1..n).rev() {
            if two_site {
                let theta = self.two_site_target(i - 1)?;
                let f = svd_truncate(&theta, &[0, 1], opts.max_bond, opts.rel_tol)?;
                self.x[i - 1] = f.left_weighted();
                self.x[i] = f.right_factor;
            } else {
                let target = self.one_site_target(i)?;
                let (l, q) = lq_orthogonalize(&target, &[0])?;
                self.x[i] = q;
                self.x[i - 1] = contract(&self.x[i - 1], &l, &[(2, 0)])?;
            }
            self.update_right(i)?;
        }
        let first = self.one_site_target(0)?;
        let norm_sq = first.norm_sqr();
        self.x[0] = first;
        Ok(norm_sq)
    }

    /// Alternating half-sweeps until converged, ending with the center on
    /// site 0. Returns the relative residual and the number of half-sweeps.
    fn run(&mut self, opts: &FitOptions, target_sq: f64, two_site_first: bool) -> Result<(f64, usize)> {
        let mut residual = f64::INFINITY;
        let mut sweeps = 0;
        let min_sweeps = if two_site_first { opts.min_half_sweeps.max(4) } else { opts.min_half_sweeps };
        loop {
            let two_site = two_site_first && sweeps < 2;
            let norm_sq = if sweeps % 2 == 0 {
                self.sweep_right(two_site, opts)?
            } else {
                self.sweep_left(two_site, opts)?
            };
            sweeps += 1;
            let r = (1.0 - norm_sq / target_sq).max(0.0);
            let improved = residual - r;
            residual = r;
            if sweeps % 2 == 1 {
                continue;
            }
            if sweeps >= opts.max_half_sweeps.max(min_sweeps)
                || (sweeps >= min_sweeps && (improved < opts.improvement * r || r < 1e-15))
            {
                return Ok((residual, sweeps));
            }
        }
    }

    fn finish(self) -> MpsVector {
        MpsVector::from_parts(self.x, self.d, Some(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::inner;
    use crate::testutil::random_mps;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mpo(n: usize, d: usize, bond: usize, rng: &mut ChaCha8Rng) -> MpoOperator {
        let sites = (0..n)
            .map(|i| {
                let l = if i == 0 { 1 } else { bond };
                let r = if i == n - 1 { 1 } else { bond };
                DenseTensor::from_fn(vec![l, d, d, r], |_| {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        MpoOperator::new(sites, d).unwrap()
    }

    fn dense_dot(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn overlap_matches_dense_for_all_operator_placements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_mps(4, 2, 3, &mut rng, false);
        let b = random_mps(4, 2, 2, &mut rng, false);
        let oa = random_mpo(4, 2, 2, &mut rng);
        let ob = random_mpo(4, 2, 3, &mut rng);
        let ad = apply_mpo(&oa, &a).unwrap().to_dense();
        let bd = apply_mpo(&ob, &b).unwrap().to_dense();
        let cases = [
            (None, None, a.to_dense(), b.to_dense()),
            (Some(&oa), None, ad.clone(), b.to_dense()),
            (None, Some(&ob), a.to_dense(), bd.clone()),
            (Some(&oa), Some(&ob), ad, bd),
        ];
        for (pa, pb, x, y) in cases {
            let got = overlap(&a, pa, pb, &b).unwrap();
            let want = dense_dot(&x, &y);
            assert!((got - want).norm() < 1e-11 * want.norm().max(1.0));
        }
        let plain = inner(&a, &b).unwrap();
        assert!((overlap(&a, None, None, &b).unwrap() - plain).norm() < 1e-12);
    }

    #[test]
    fn exact_path_for_small_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_mps(5, 2, 2, &mut rng, false);
        let w = random_mps(5, 2, 3, &mut rng, false);
        let o = random_mpo(5, 2, 2, &mut rng);
        let terms = [Term::applied(C64::new(2.0, 0.0), &o, &v), Term::plain(C64::new(-1.0, 0.0), &w)];
        let out = fit_sum(&terms, &v, &FitOptions::default()).unwrap();
        assert!(out.exact);
        let want: Vec<C64> = apply_mpo(&o, &v)
            .unwrap()
            .to_dense()
            .iter()
            .zip(w.to_dense())
            .map(|(a, b)| 2.0 * a - b)
            .collect();
        let got = out.vec.to_dense();
        let err: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err.sqrt() < 1e-10);
    }

    #[test]
    fn variational_fit_recovers_representable_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_mps(8, 2, 3, &mut rng, false);
        let w = random_mps(8, 2, 2, &mut rng, false);
        let o = random_mpo(8, 2, 2, &mut rng);
        let terms = [Term::applied(C64::new(1.0, 0.0), &o, &v), Term::plain(C64::new(0.5, 0.5), &w)];
        let opts = FitOptions {
            max_bond: 16,
            rel_tol: 0.0,
            exact_bond_limit: 0,
            max_half_sweeps: 8,
            ..FitOptions::default()
        };
        // a bond-2 guess must grow to hold the sum
        let guess = random_mps(8, 2, 2, &mut rng, false);
        let target = sum_norm_sqr(&terms).unwrap();
        for growth in [BondGrowth::Padding, BondGrowth::TwoSite] {
            let out = fit_sum(&terms, &guess, &FitOptions { growth, ..opts.clone() }).unwrap();
            assert!(!out.exact);
            assert!(out.discarded_weight < 1e-10, "{growth:?}: {}", out.discarded_weight);
            let got = out.vec.norm_sqr();
            assert!((got / target - 1.0).abs() < 1e-10, "{growth:?}");
        }
    }

    #[test]
    fn residual_matches_true_distance_under_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_mps(8, 2, 4, &mut rng, true);
        let o = random_mpo(8, 2, 2, &mut rng);
        let terms = [Term::applied(C64::new(1.0, 0.0), &o, &v)];
        let opts = FitOptions {
            max_bond: 4,
            rel_tol: 0.0,
            exact_bond_limit: 0,
            ..FitOptions::default()
        };
        let out = fit_sum(&terms, &v, &opts).unwrap();
        assert!(out.vec.max_bond() <= 4);
        let exact = apply_mpo(&o, &v).unwrap();
        let t = exact.norm_sqr();
        let cross = inner(&out.vec, &exact).unwrap();
        let dist = (out.vec.norm_sqr() - 2.0 * cross.re + t) / t;
        // for the optimum, |x - phi|^2 = |phi|^2 - |x|^2
        assert!((dist - out.discarded_weight).abs() < 1e-8, "{dist} vs {}", out.discarded_weight);
        // close to the SVD-compressed optimum
        let (svd, _) = compress(&exact, 4, 0.0).unwrap();
        let svd_dist = 1.0 - svd.norm_sqr() / t;
        assert!(out.discarded_weight <= svd_dist * 1.05 + 1e-12);
    }

    #[test]
    fn padded_fit_reports_true_distance() {
        // bond-1 guess, target needs bond up to 12: several widenings
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = random_mps(10, 2, 6, &mut rng, true);
        let o = random_mpo(10, 2, 2, &mut rng);
        let guess = random_mps(10, 2, 1, &mut rng, true);
        let terms = [Term::applied(C64::new(1.0, 0.0), &o, &v)];
        let opts = FitOptions {
            max_bond: 10,
            rel_tol: 1e-6,
            exact_bond_limit: 0,
            max_half_sweeps: 8,
            ..FitOptions::default()
        };
        let out = fit_sum(&terms, &guess, &opts).unwrap();
        assert!(out.vec.max_bond() <= 10 && out.vec.max_bond() > 4);
        let exact = apply_mpo(&o, &v).unwrap();
        let t = exact.norm_sqr();
        let dist = (out.vec.norm_sqr() - 2.0 * inner(&out.vec, &exact).unwrap().re + t) / t;
        assert!((dist - out.discarded_weight).abs() < 0.05 * dist + 1e-10, "{dist} vs {}", out.discarded_weight);
        let (svd, _) = compress(&exact, 10, 0.0).unwrap();
        assert!(dist <= 1.5 * (1.0 - svd.norm_sqr() / t) + 1e-9);
    }

    #[test]
    fn zero_target_gives_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_mps(6, 2, 10, &mut rng, false);
        let terms = [Term::plain(C64::new(1.0, 0.0), &v), Term::plain(C64::new(-1.0, 0.0), &v)];
        let opts = FitOptions {
            exact_bond_limit: 0,
            ..FitOptions::default()
        };
        let out = fit_sum(&terms, &v, &opts).unwrap();
        assert!(out.vec.norm_sqr() < 1e-20);
    }
}
