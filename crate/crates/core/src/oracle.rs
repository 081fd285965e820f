//! Dense exact-diagonalization reference for small chains.
//!
//! Basis states are bit strings with site 0 the most significant bit and bit
//! value 0 the `s^z = +1` state. Density matrices are row-major
//! `2^N x 2^N` complex arrays in that basis.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::chebyshev::{clenshaw, series_coeff_with, JacksonForm};
use crate::error::{Error, Result};
use crate::linalg::{eigh_real_rm, matmul_rm, real_similarity, real_transpose_times, singular_values_rm};
use crate::model::{InitialState, LocalOp, SpinChainModel};
use crate::observables::ObservableSpec;

/// Largest chain handled densely.
pub const DENSE_LIMIT: usize = 14;

/// Level spacings below this are reported as degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn guard(n: usize) -> Result<usize> {
    if n == 0 || n > DENSE_LIMIT {
        return Err(Error::SizeLimit { n, limit: DENSE_LIMIT });
    }
    Ok(1 << n)
}

#[inline]
fn bit(b: usize, site: usize, n: usize) -> usize {
    (b >> (n - 1 - site)) & 1
}

/// Real symmetric Hamiltonian, row-major.
pub fn dense_hamiltonian(m: &SpinChainModel) -> Result<Vec<f64>> {
    let n = m.n;
    let dim = guard(n)?;
    let mut h = vec![0.0; dim * dim];
    for b in 0..dim {
        let z = |i: usize| 1.0 - 2.0 * bit(b, i, n) as f64;
        let mut diag = 0.0;
        for i in 0..n {
            diag += m.h * z(i);
            if i + 1 < n {
                diag += m.j * z(i) * z(i + 1);
            }
            h[b * dim + (b ^ (1 << (n - 1 - i)))] += m.g;
        }
        h[b * dim + b] += diag;
    }
    Ok(h)
}

/// `op` on `site` applied to a dense state (or to each column of a
/// row-major `2^N x cols` block).
pub fn apply_local(op: &LocalOp, site: usize, n: usize, v: &[C64], cols: usize) -> Vec<C64> {
    let dim = 1 << n;
    let mask = 1 << (n - 1 - site);
    let mut out = vec![ZERO; dim * cols];
    for b in 0..dim {
        let s = bit(b, site, n);
        let (b0, b1) = (b & !mask, b | mask);
        let (a0, a1) = (op[2 * s], op[2 * s + 1]);
        let row = &mut out[b * cols..(b + 1) * cols];
        for (c, r) in row.iter_mut().enumerate() {
            *r = a0 * v[b0 * cols + c] + a1 * v[b1 * cols + c];
        }
    }
    out
}

/// `|s>^{⊗N}` as a dense vector.
pub fn product_vector(s: InitialState, n: usize) -> Result<Vec<C64>> {
    let dim = guard(n)?;
    let local = s.local_vector();
    Ok((0..dim).map(|b| (0..n).map(|i| local[bit(b, i, n)]).product()).collect())
}

/// Vectorization of a dense operator: local index `2 * ket + bra`, site 0 most significant.
pub fn vectorize_dense(matrix: &[C64], n: usize) -> Vec<C64> {
    let dim = 1 << n;
    let mut out = vec![ZERO; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let k = (0..n).fold(0, |k, i| 4 * k + 2 * bit(a, i, n) + bit(b, i, n));
            out[k] = matrix[a * dim + b];
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub n: usize,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Row-major and real orthogonal; column `k` is the eigenvector of `energies[k]`.
    pub eigenvectors: Vec<f64>,
}

pub fn diagonalize(m: &SpinChainModel) -> Result<SpectralDecomposition> {
    let h = dense_hamiltonian(m)?;
    let dim = 1 << m.n;
    let (energies, eigenvectors) = eigh_real_rm(&h, dim)?;
    Ok(SpectralDecomposition {
        n: m.n,
        energies,
        eigenvectors,
    })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `max |V^T V - 1|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a..d {
                let s: f64 = (0..d).map(|i| v[i * d + a] * v[i * d + b]).sum();
                let e = if a == b { s - 1.0 } else { s };
                worst = worst.max(e.abs());
            }
        }
        worst
    }

    /// `max |V E V^T - H|`.
    pub fn reconstruction_error(&self, h: &[f64]) -> f64 {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..d).map(|k| v[i * d + k] * self.energies[k] * v[j * d + k]).sum();
                worst = worst.max((s - h[i * d + j]).abs());
            }
        }
        worst
    }

    /// Smallest spacing between distinct eigenvalue indices.
    pub fn min_gap(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn has_degeneracy(&self) -> bool {
        self.min_gap() < DEGENERACY_TOL
    }

    /// Energy-basis amplitudes `c_n = <E_n|psi>`.
    pub fn coefficients(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {}-dim spectrum",
                psi.len(),
                self.dim()
            )));
        }
        Ok(real_transpose_times(&self.eigenvectors, psi, self.dim(), 1))
    }

    /// `V^T rho V`.
    pub fn to_energy_basis(&self, rho: &DenseDensity) -> Vec<C64> {
        real_similarity(&self.eigenvectors, &rho.matrix, self.dim(), true)
    }

    /// `V r V^T`.
    pub fn from_energy_basis(&self, r: &[C64]) -> DenseDensity {
        DenseDensity {
            n: self.n,
            matrix: real_similarity(&self.eigenvectors, r, self.dim(), false),
        }
    }

    /// Multiplies each energy-basis entry `(a, b)` by `f(E_a - E_b)`.
    pub fn apply_kernel(&self, rho: &DenseDensity, f: impl Fn(f64) -> f64) -> DenseDensity {
        let d = self.dim();
        let mut r = self.to_energy_basis(rho);
        for a in 0..d {
            for b in 0..d {
                r[a * d + b] *= f(self.energies[a] - self.energies[b]);
            }
        }
        self.from_energy_basis(&r)
    }

    /// `<E_a|O|E_b>` as a row-major matrix.
    pub fn operator_matrix(&self, spec: &ObservableSpec) -> Vec<C64> {
        let d = self.dim();
        let v: Vec<C64> = self.eigenvectors.iter().map(|&x| C64::new(x, 0.0)).collect();
        let ov = apply_local(&spec.operator, spec.site, self.n, &v, d);
        real_transpose_times(&self.eigenvectors, &ov, d, d)
    }

    /// Diagonal elements `<E_a|O|E_a>`.
    pub fn operator_diagonal(&self, spec: &ObservableSpec) -> Vec<f64> {
        let d = self.dim();
        let v: Vec<C64> = self.eigenvectors.iter().map(|&x| C64::new(x, 0.0)).collect();
        let ov = apply_local(&spec.operator, spec.site, self.n, &v, d);
        (0..d)
            .map(|a| (0..d).map(|i| self.eigenvectors[i * d + a] * ov[i * d + a].re).sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseDensity {
    pub n: usize,
    pub matrix: Vec<C64>,
}

impl DenseDensity {
    pub fn new(n: usize, matrix: Vec<C64>) -> Result<Self> {
        let dim = guard(n)?;
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} density",
                matrix.len()
            )));
        }
        Ok(Self { n, matrix })
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &[C64], n: usize) -> Result<Self> {
        let dim = guard(n)?;
        if psi.len() != dim {
            return Err(Error::DimensionMismatch(format!("state of length {} for N = {n}", psi.len())));
        }
        let matrix = (0..dim * dim).map(|k| psi[k / dim] * psi[k % dim].conj()).collect();
        Ok(Self { n, matrix })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.matrix[i * d + i]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[i * d + j] - self.matrix[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// `tr(rho^dagger rho)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr(O rho)`.
    pub fn trace_with(&self, spec: &ObservableSpec) -> C64 {
        let d = self.dim();
        let o_rho = apply_local(&spec.operator, spec.site, self.n, &self.matrix, d);
        (0..d).map(|i| o_rho[i * d + i]).sum()
    }

    /// `Re tr(O rho) / tr(rho)`.
    pub fn expectation(&self, spec: &ObservableSpec) -> Result<f64> {
        let tr = self.trace();
        if tr.norm() < 1e-12 * self.frobenius_sq().sqrt() || tr.norm() == 0.0 {
            return Err(Error::DegenerateNormalization {
                trace: tr.norm(),
                norm: self.frobenius_sq().sqrt(),
            });
        }
        Ok((self.trace_with(spec) / tr).re)
    }

    pub fn vectorized(&self) -> Vec<C64> {
        vectorize_dense(&self.matrix, self.n)
    }
}

fn check_normalized(psi: &[C64]) -> Result<()> {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::DimensionMismatch(format!("state not normalized (|psi|^2 = {norm})")));
    }
    Ok(())
}

/// `sum_n |c_n|^2 |E_n><E_n|`.
pub fn diagonal_ensemble(psi0: &[C64], spec: &SpectralDecomposition) -> Result<DenseDensity> {
    check_normalized(psi0)?;
    let d = spec.dim();
    let c = spec.coefficients(psi0)?;
    let mut r = vec![ZERO; d * d];
    for (a, ca) in c.iter().enumerate() {
        r[a * d + a] = C64::new(ca.norm_sqr(), 0.0);
    }
    Ok(spec.from_energy_basis(&r))
}

/// Energy-basis entries damped by `exp(-(E_a - E_b)^2 / (2 sigma^2))`.
pub fn gaussian_filter_exact(rho0: &DenseDensity, sigma: f64, spec: &SpectralDecomposition) -> Result<DenseDensity> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidFilterConfig(format!("width must be positive, got {sigma}")));
    }
    Ok(spec.apply_kernel(rho0, gaussian_kernel(sigma)))
}

pub fn gaussian_kernel(sigma: f64) -> impl Fn(f64) -> f64 {
    move |w| if sigma.is_infinite() { 1.0 } else { (-w * w / (2.0 * sigma * sigma)).exp() }
}

/// `q_M(alpha w)` with the coefficients precomputed.
pub fn chebyshev_kernel(order: usize, alpha: f64, form: JacksonForm) -> Result<impl Fn(f64) -> f64> {
    let coeffs = (0..=order / 2)
        .map(|k| series_coeff_with(k, order, form))
        .collect::<Result<Vec<_>>>()?;
    Ok(move |w: f64| {
        let x = alpha * w;
        clenshaw(&coeffs, 2.0 * x * x - 1.0)
    })
}

fn check_alpha(spec: &SpectralDecomposition, alpha: f64) -> Result<()> {
    let width = spec.energies[spec.dim() - 1] - spec.energies[0];
    if alpha.is_nan() || alpha <= 0.0 || alpha * width >= 1.0 {
        return Err(Error::InvalidFilterConfig(format!(
            "alpha = {alpha} does not map the spectral width {width} inside (-1, 1)"
        )));
    }
    Ok(())
}

/// Energy-basis entries multiplied by `q_M(alpha (E_a - E_b))`, standard Jackson form.
pub fn chebyshev_filter_exact(
    rho0: &DenseDensity,
    order: usize,
    alpha: f64,
    spec: &SpectralDecomposition,
) -> Result<DenseDensity> {
    chebyshev_filter_exact_with(rho0, order, alpha, JacksonForm::Standard, spec)
}

pub fn chebyshev_filter_exact_with(
    rho0: &DenseDensity,
    order: usize,
    alpha: f64,
    form: JacksonForm,
    spec: &SpectralDecomposition,
) -> Result<DenseDensity> {
    check_alpha(spec, alpha)?;
    Ok(spec.apply_kernel(rho0, chebyshev_kernel(order, alpha, form)?))
}

/// `sum_{a != b} |rho_ab|^2` in the energy basis.
pub fn frobenius_off_diagonal(rho: &DenseDensity, spec: &SpectralDecomposition) -> f64 {
    let d = spec.dim();
    let r = spec.to_energy_basis(rho);
    let diag: f64 = (0..d).map(|a| r[a * d + a].norm_sqr()).sum();
    r.iter().map(|z| z.norm_sqr()).sum::<f64>() - diag
}

/// `sum_n |c_n|^4`.
pub fn ipr(psi0: &[C64], spec: &SpectralDecomposition) -> Result<f64> {
    Ok(spec.coefficients(psi0)?.iter().map(|c| c.norm_sqr().powi(2)).sum())
}

/// `|[H, rho]|_F^2`, i.e. `-tr([H, rho]^2)` for Hermitian `rho`.
pub fn commutator_norm_sq(h: &[f64], rho: &DenseDensity) -> f64 {
    let d = rho.dim();
    let hc: Vec<C64> = h.iter().map(|&x| C64::new(x, 0.0)).collect();
    let hr = matmul_rm(&hc, &rho.matrix, d, d, d);
    let rh = matmul_rm(&rho.matrix, &hc, d, d, d);
    hr.iter().zip(&rh).map(|(a, b)| (a - b).norm_sqr()).sum()
}

/// Entropy (base 2) of the normalized vectorized `rho` across bond `cut`.
pub fn osee_exact(rho: &DenseDensity, cut: usize) -> Result<f64> {
    let n = rho.n;
    if cut == 0 || cut >= n {
        return Err(Error::SiteOutOfRange { index: cut, len: n });
    }
    let v = rho.vectorized();
    let rows = 1 << (2 * cut);
    let s = singular_values_rm(&v, rows, v.len() / rows)?;
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(s.iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalReference {
    pub beta: f64,
    pub energy: f64,
    pub observables: BTreeMap<String, f64>,
}

/// Gibbs weights `exp(-beta E_n) / Z`, shifted for stability.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let shift = if beta >= 0.0 { energies[0] } else { energies[energies.len() - 1] };
    let w: Vec<f64> = energies.iter().map(|&e| (-beta * (e - shift)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn thermal_energy(energies: &[f64], beta: f64) -> f64 {
    gibbs_weights(energies, beta).iter().zip(energies).map(|(w, e)| w * e).sum()
}

/// Solves `<H>_beta = target_energy` by bracketed bisection.
pub fn thermal_beta(energies: &[f64], target_energy: f64, n: usize) -> Result<f64> {
    let (min, max) = (energies[0], energies[energies.len() - 1]);
    if !(target_energy > min && target_energy < max) {
        return Err(Error::EnergyOutOfRange {
            target: target_energy,
            min,
            max,
        });
    }
    let tol = 1e-10 * n as f64;
    let e0 = thermal_energy(energies, 0.0);
    let dir = if target_energy < e0 { 1.0 } else { -1.0 };
    let (mut lo, mut e_lo) = (0.0f64, e0);
    let mut hi = dir;
    let mut e_hi = thermal_energy(energies, hi);
    while (e_hi - target_energy) * dir > 0.0 {
        if (e_hi - e_lo) * dir > 0.0 {
            return Err(Error::NonMonotoneEnergy(hi));
        }
        lo = hi;
        e_lo = e_hi;
        hi *= 2.0;
        if hi.abs() > 1e6 {
            return Err(Error::EnergyOutOfRange {
                target: target_energy,
                min,
                max,
            });
        }
        e_hi = thermal_energy(energies, hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e_mid = thermal_energy(energies, mid);
        // energy decreases with beta: e_lo >= e_mid >= e_hi in the beta > 0 direction
        if (e_mid - e_lo) * dir > tol || (e_hi - e_mid) * dir > tol {
            return Err(Error::NonMonotoneEnergy(mid));
        }
        if (e_mid - target_energy).abs() <= tol {
            return Ok(mid);
        }
        if (e_mid - target_energy) * dir > 0.0 {
            lo = mid;
            e_lo = e_mid;
        } else {
            hi = mid;
            e_hi = e_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Gibbs state at the temperature whose mean energy is `target_energy`.
pub fn thermal_reference(
    m: &SpinChainModel,
    target_energy: f64,
    observables: &[ObservableSpec],
) -> Result<ThermalReference> {
    thermal_reference_from(&diagonalize(m)?, target_energy, observables)
}

pub fn thermal_reference_from(
    spec: &SpectralDecomposition,
    target_energy: f64,
    observables: &[ObservableSpec],
) -> Result<ThermalReference> {
    let beta = thermal_beta(&spec.energies, target_energy, spec.n)?;
    let w = gibbs_weights(&spec.energies, beta);
    let observables = observables
        .iter()
        .map(|o| {
            let diag = spec.operator_diagonal(o);
            (o.label.clone(), w.iter().zip(&diag).map(|(a, b)| a * b).sum())
        })
        .collect();
    Ok(ThermalReference {
        beta,
        energy: thermal_energy(&spec.energies, beta),
        observables,
    })
}

/// Energy-basis view of a pure initial state: filtered moments in `O(4^N)`
/// per width without leaving the eigenbasis.
pub struct EigenbasisState<'a> {
    spec: &'a SpectralDecomposition,
    coeffs: Vec<C64>,
    ops: Vec<(String, Vec<C64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredMoments {
    pub trace: f64,
    pub frobenius_sq: f64,
    pub frobenius_off_diagonal: f64,
    /// `<rho|H_C^2|rho> / <rho|rho>` in physical units.
    pub delta_sq: f64,
    pub observables: BTreeMap<String, f64>,
}

impl<'a> EigenbasisState<'a> {
    pub fn new(spec: &'a SpectralDecomposition, psi0: &[C64], observables: &[ObservableSpec]) -> Result<Self> {
        check_normalized(psi0)?;
        let coeffs = spec.coefficients(psi0)?;
        let ops = observables
            .iter()
            .map(|o| (o.label.clone(), spec.operator_matrix(o)))
            .collect();
        Ok(Self { spec, coeffs, ops })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().zip(&self.spec.energies).map(|(c, e)| c.norm_sqr() * e).sum()
    }

    pub fn ipr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr().powi(2)).sum()
    }

    /// Diagonal-ensemble expectations.
    pub fn diagonal_expectations(&self) -> BTreeMap<String, f64> {
        let d = self.spec.dim();
        self.ops
            .iter()
            .map(|(label, o)| {
                let v = (0..d).map(|a| self.coeffs[a].norm_sqr() * o[a * d + a].re).sum();
                (label.clone(), v)
            })
            .collect()
    }

    /// Moments of `rho_ab = c_a c_b^* f(E_a - E_b)`; `f` must be even.
    pub fn filtered(&self, f: impl Fn(f64) -> f64) -> Result<FilteredMoments> {
        let d = self.spec.dim();
        let e = &self.spec.energies;
        let p: Vec<f64> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        let f0 = f(0.0);
        let trace = f0 * p.iter().sum::<f64>();
        if trace.abs() < 1e-300 {
            return Err(Error::DegenerateNormalization { trace, norm: 0.0 });
        }
        let mut kernel = vec![0.0; d * d];
        for a in 0..d {
            kernel[a * d + a] = f0;
            for b in a + 1..d {
                let k = f(e[a] - e[b]);
                kernel[a * d + b] = k;
                kernel[b * d + a] = k;
            }
        }
        let (mut frob, mut off, mut hc2) = (0.0, 0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                let w = p[a] * p[b] * kernel[a * d + b].powi(2);
                frob += w;
                if a != b {
                    off += w;
                    hc2 += w * (e[a] - e[b]).powi(2);
                }
            }
        }
        let observables = self
            .ops
            .iter()
            .map(|(label, o)| {
                let mut acc = ZERO;
                for a in 0..d {
                    let ca = self.coeffs[a];
                    for b in 0..d {
                        // tr(O rho) = sum_ab rho_ab O_ba
                        acc += ca * self.coeffs[b].conj() * kernel[a * d + b] * o[b * d + a];
                    }
                }
                (label.clone(), acc.re / trace)
            })
            .collect();
        Ok(FilteredMoments {
            trace,
            frobenius_sq: frob,
            frobenius_off_diagonal: off,
            delta_sq: hc2 / frob,
            observables,
        })
    }

    /// The filtered density in the computational basis.
    pub fn density(&self, f: impl Fn(f64) -> f64) -> DenseDensity {
        let d = self.spec.dim();
        let e = &self.spec.energies;
        let mut r = vec![ZERO; d * d];
        for a in 0..d {
            for b in 0..d {
                r[a * d + b] = self.coeffs[a] * self.coeffs[b].conj() * f(e[a] - e[b]);
            }
        }
        self.spec.from_energy_basis(&r)
    }
}

/// `exp(-i H dt)` by scaling and squaring of a Taylor series; independent of
/// any eigendecomposition.
pub fn propagator(h: &[f64], dim: usize, dt: f64) -> Vec<C64> {
    let norm = (0..dim)
        .map(|i| h[i * dim..(i + 1) * dim].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * dt.abs();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let tau = dt / f64::from(2u32.pow(squarings));
    let a: Vec<C64> = h.iter().map(|&x| C64::new(0.0, -x * tau)).collect();
    let mut u: Vec<C64> = (0..dim * dim)
        .map(|k| if k / dim == k % dim { C64::new(1.0, 0.0) } else { ZERO })
        .collect();
    let mut term = u.clone();
    for k in 1..=18 {
        term = matmul_rm(&term, &a, dim, dim, dim);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|z| *z *= inv);
        u.iter_mut().zip(&term).for_each(|(x, t)| *x += t);
    }
    for _ in 0..squarings {
        u = matmul_rm(&u, &u, dim, dim, dim);
    }
    u
}

/// Trapezoidal time average over `[0, window]` of the expectations in the
/// evolved pure state, on a grid of step `dt`.
pub fn time_averaged_expectations(
    m: &SpinChainModel,
    psi0: &[C64],
    observables: &[ObservableSpec],
    window: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    check_normalized(psi0)?;
    let h = dense_hamiltonian(m)?;
    let dim = 1 << m.n;
    let u = propagator(&h, dim, dt);
    let steps = (window / dt).round() as usize;
    if steps == 0 {
        return Err(Error::Config("time window shorter than one step".into()));
    }
    let measure = |psi: &[C64]| -> Vec<f64> {
        observables
            .iter()
            .map(|o| {
                let opsi = apply_local(&o.operator, o.site, m.n, psi, 1);
                psi.iter().zip(&opsi).map(|(a, b)| (a.conj() * b).re).sum()
            })
            .collect()
    };
    let mut psi = psi0.to_vec();
    let mut acc: Vec<f64> = measure(&psi).into_iter().map(|x| 0.5 * x).collect();
    for step in 1..=steps {
        psi = matmul_rm(&u, &psi, dim, dim, 1);
        let w = if step == steps { 0.5 } else { 1.0 };
        acc.iter_mut().zip(measure(&psi)).for_each(|(a, x)| *a += w * x);
    }
    Ok(acc.into_iter().map(|a| a / steps as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::series_value;
    use crate::model::{commutator_mpo, ising_mpo, product_state, vectorized_density, SIGMA_X, SIGMA_Z};
    use crate::mps::apply_mpo;
    use crate::observables::delta_squared;

    fn model(n: usize) -> SpinChainModel {
        SpinChainModel::with_default_couplings(n).unwrap()
    }

    fn obs(n: usize) -> Vec<ObservableSpec> {
        vec![ObservableSpec::sigma_x(n), ObservableSpec::sigma_z(n)]
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hamiltonian_matches_the_mpo() {
        for n in [2, 3, 5] {
            let m = model(n);
            let h = dense_hamiltonian(&m).unwrap();
            let from_mpo = ising_mpo(&m).to_dense();
            let hc: Vec<C64> = h.iter().map(|&x| C64::new(x, 0.0)).collect();
            assert!(max_diff(&hc, &from_mpo) < 1e-13);
        }
    }

    #[test]
    fn two_site_hamiltonian_by_hand() {
        let m = SpinChainModel::new(1.0, 0.0, 0.0, 2).unwrap();
        let h = dense_hamiltonian(&m).unwrap();
        assert_eq!(h, vec![1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 1.]);
        let m = SpinChainModel::new(0.0, 1.0, 0.0, 2).unwrap();
        let h = dense_hamiltonian(&m).unwrap();
        assert_eq!(h, vec![0., 1., 1., 0., 1., 0., 0., 1., 1., 0., 0., 1., 0., 1., 1., 0.]);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(dense_hamiltonian(&model(15)), Err(Error::SizeLimit { .. })));
        assert!(product_vector(InitialState::XPlus, 15).is_err());
    }

    #[test]
    fn spectrum_reconstructs_and_is_orthogonal() {
        let m = model(6);
        let spec = diagonalize(&m).unwrap();
        assert!(spec.energies.windows(2).all(|w| w[0] <= w[1]));
        assert!(spec.unitarity_error() < 1e-10);
        assert!(spec.reconstruction_error(&dense_hamiltonian(&m).unwrap()) < 1e-9);
    }

    #[test]
    fn vectorization_matches_mps_convention() {
        for s in InitialState::ALL {
            let psi = product_vector(s, 3).unwrap();
            let rho = DenseDensity::pure(&psi, 3).unwrap();
            let mps = vectorized_density(&product_state(s, 3).unwrap()).unwrap().to_dense();
            assert!(max_diff(&rho.vectorized(), &mps) < 1e-15, "{s}");
        }
    }

    #[test]
    fn eigenstate_diagonal_ensemble_is_its_projector() {
        let spec = diagonalize(&model(4)).unwrap();
        let d = spec.dim();
        let k = 3;
        let psi: Vec<C64> = (0..d).map(|i| C64::new(spec.eigenvectors[i * d + k], 0.0)).collect();
        let rho = diagonal_ensemble(&psi, &spec).unwrap();
        let proj = DenseDensity::pure(&psi, 4).unwrap();
        assert!(max_diff(&rho.matrix, &proj.matrix) < 1e-10);
        assert!((ipr(&psi, &spec).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_site_diagonal_ensemble_by_the_formula() {
        let m = SpinChainModel::new(1.0, 0.0, 0.0, 2).unwrap();
        // H = diag(1, -1, -1, 1) is degenerate; the ensemble is defined through
        // whichever eigenbasis the solver picks, and is exact for this state.
        let spec = diagonalize(&m).unwrap();
        let psi = product_vector(InitialState::XPlus, 2).unwrap();
        let rho = diagonal_ensemble(&psi, &spec).unwrap();
        assert!(spec.has_degeneracy());
        // <H> = <zz> = 0 and <H^2> = 1 are basis independent and conserved
        let d = 4;
        let h = dense_hamiltonian(&m).unwrap();
        let tr_h: f64 = (0..d).map(|i| h[i * d + i] * rho.matrix[i * d + i].re).sum();
        let tr_h2: f64 = (0..d).map(|i| h[i * d + i].powi(2) * rho.matrix[i * d + i].re).sum();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(tr_h.abs() < 1e-12 && (tr_h2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_ensemble_commutes_with_h() {
        let m = model(6);
        let spec = diagonalize(&m).unwrap();
        let h = dense_hamiltonian(&m).unwrap();
        let rho = diagonal_ensemble(&product_vector(InitialState::XPlus, 6).unwrap(), &spec).unwrap();
        assert!(commutator_norm_sq(&h, &rho).sqrt() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-10);
        assert!(!spec.has_degeneracy());
    }

    #[test]
    fn gaussian_filter_fixed_points_and_trace() {
        let m = model(5);
        let spec = diagonalize(&m).unwrap();
        let psi = product_vector(InitialState::ZPlus, 5).unwrap();
        let rho_d = diagonal_ensemble(&psi, &spec).unwrap();
        let f = gaussian_filter_exact(&rho_d, 0.3, &spec).unwrap();
        assert!(max_diff(&f.matrix, &rho_d.matrix) < 1e-12);
        let rho0 = DenseDensity::pure(&psi, 5).unwrap();
        let inf = gaussian_filter_exact(&rho0, f64::INFINITY, &spec).unwrap();
        assert!(max_diff(&inf.matrix, &rho0.matrix) < 1e-12);
        let f = gaussian_filter_exact(&rho0, 0.7, &spec).unwrap();
        assert!((f.trace().re - 1.0).abs() < 1e-12);
        // filter then project = project
        let project = |r: &DenseDensity| {
            let d = spec.dim();
            let mut e = spec.to_energy_basis(r);
            for a in 0..d {
                for b in 0..d {
                    if a != b {
                        e[a * d + b] = ZERO;
                    }
                }
            }
            spec.from_energy_basis(&e)
        };
        assert!(max_diff(&project(&f).matrix, &rho_d.matrix) < 1e-12);
        assert!(gaussian_filter_exact(&rho0, 0.0, &spec).is_err());
    }

    #[test]
    fn gaussian_filter_converges_to_the_diagonal_ensemble() {
        let n = 8;
        let spec = diagonalize(&model(n)).unwrap();
        let psi = product_vector(InitialState::XPlus, n).unwrap();
        let state = EigenbasisState::new(&spec, &psi, &obs(n)).unwrap();
        let diag = state.diagonal_expectations();
        let err = |sigma: f64| {
            let f = state.filtered(gaussian_kernel(sigma)).unwrap();
            (f.observables["sx"] - diag["sx"]).abs() + (f.observables["sz"] - diag["sz"]).abs()
        };
        let errs: Vec<f64> = [1.0, 0.3, 0.1, 0.01, 1e-4].iter().map(|&s| err(s)).collect();
        assert!(errs[4] < 1e-6, "{errs:?}");
        assert!(errs[0] > errs[2] && errs[2] > errs[4], "{errs:?}");
    }

    #[test]
    fn fast_path_matches_dense_filtering() {
        let n = 6;
        let m = model(n);
        let spec = diagonalize(&m).unwrap();
        let psi = product_vector(InitialState::YPlus, n).unwrap();
        let os = vec![ObservableSpec::parse("sy", n).unwrap(), ObservableSpec::sigma_x(n)];
        let state = EigenbasisState::new(&spec, &psi, &os).unwrap();
        let rho0 = DenseDensity::pure(&psi, n).unwrap();
        let f = gaussian_kernel(0.4);
        let fast = state.filtered(&f).unwrap();
        let dense = gaussian_filter_exact(&rho0, 0.4, &spec).unwrap();
        assert!(max_diff(&state.density(&f).matrix, &dense.matrix) < 1e-12);
        assert!((fast.frobenius_sq - dense.frobenius_sq()).abs() < 1e-12);
        assert!((fast.frobenius_off_diagonal - frobenius_off_diagonal(&dense, &spec)).abs() < 1e-12);
        for o in &os {
            assert!((fast.observables[&o.label] - dense.expectation(o).unwrap()).abs() < 1e-12);
        }
        let h = dense_hamiltonian(&m).unwrap();
        assert!((fast.delta_sq - commutator_norm_sq(&h, &dense) / dense.frobenius_sq()).abs() < 1e-10);
        let e: f64 = psi
            .iter()
            .zip(dense_matvec_real(&h, &psi))
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        assert!((state.energy() - e).abs() < 1e-12);
    }

    fn dense_matvec_real(h: &[f64], v: &[C64]) -> Vec<C64> {
        let d = v.len();
        (0..d).map(|i| (0..d).map(|j| v[j] * h[i * d + j]).sum()).collect()
    }

    #[test]
    fn chebyshev_filter_uses_the_scalar_series() {
        let m = model(4);
        let spec = diagonalize(&m).unwrap();
        let rho0 = DenseDensity::pure(&product_vector(InitialState::XPlus, 4).unwrap(), 4).unwrap();
        let f = chebyshev_filter_exact(&rho0, 24, m.alpha(), &spec).unwrap();
        let d = spec.dim();
        let (r0, r1) = (spec.to_energy_basis(&rho0), spec.to_energy_basis(&f));
        for a in [0, 3, 9] {
            for b in [1, 7, 15] {
                let q = series_value(m.alpha() * (spec.energies[a] - spec.energies[b]), 24, JacksonForm::Standard);
                assert!((r1[a * d + b] - r0[a * d + b] * q).norm() < 1e-12);
            }
        }
        assert!(chebyshev_filter_exact(&rho0, 24, 1.0, &spec).is_err());
    }

    #[test]
    fn chebyshev_and_gaussian_filters_agree() {
        // The damped series tracks a Gaussian of rescaled width pi / M far
        // better than sqrt(pi) / M; both are within 2% once M = 128 at N = 8.
        let n = 8;
        let m = model(n);
        let spec = diagonalize(&m).unwrap();
        let psi = product_vector(InitialState::XPlus, n).unwrap();
        let state = EigenbasisState::new(&spec, &psi, &obs(n)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        for order in [32, 64, 128] {
            let cheb = state.filtered(chebyshev_kernel(order, m.alpha(), JacksonForm::Standard).unwrap()).unwrap();
            let width = |c: f64| c / (order as f64 * m.alpha());
            let wide = state.filtered(gaussian_kernel(width(std::f64::consts::PI))).unwrap();
            let narrow = state.filtered(gaussian_kernel(width(std::f64::consts::PI.sqrt()))).unwrap();
            for l in ["sx", "sz"] {
                let (c, w, s) = (cheb.observables[l], wide.observables[l], narrow.observables[l]);
                assert!(rel(c, w) < rel(c, s), "M={order} {l}");
                if order >= 128 {
                    assert!(rel(c, w) < 0.02 && rel(c, s) < 0.02, "M={order} {l}: {c} {w} {s}");
                }
            }
        }
    }

    #[test]
    fn ipr_limits() {
        let spec = diagonalize(&model(5)).unwrap();
        let d = spec.dim();
        // the uniform superposition of all eigenstates
        let psi: Vec<C64> = (0..d)
            .map(|i| C64::new((0..d).map(|k| spec.eigenvectors[i * d + k]).sum::<f64>() / (d as f64).sqrt(), 0.0))
            .collect();
        assert!((ipr(&psi, &spec).unwrap() - 1.0 / d as f64).abs() < 1e-12);
    }

    #[test]
    fn ipr_decreases_geometrically_for_x_plus() {
        let iprs: Vec<f64> = [6, 8, 10]
            .iter()
            .map(|&n| ipr(&product_vector(InitialState::XPlus, n).unwrap(), &diagonalize(&model(n)).unwrap()).unwrap())
            .collect();
        // |X+> sits near the spectral edge for g < 0, so the decay rate per
        // two sites is well above 1/4, but it is steady
        let (r1, r2) = (iprs[1] / iprs[0], iprs[2] / iprs[1]);
        assert!(r1 < 0.9 && r2 < 0.9, "{iprs:?}");
        assert!((r1 / r2 - 1.0).abs() < 0.1, "{iprs:?}");
    }

    #[test]
    fn delta_squared_matches_dense_commutator() {
        for n in [4, 6] {
            let m = model(n);
            let h = dense_hamiltonian(&m).unwrap();
            for s in [InitialState::XPlus, InitialState::YMinus, InitialState::ZPlus] {
                let rho = DenseDensity::pure(&product_vector(s, n).unwrap(), n).unwrap();
                let dense = commutator_norm_sq(&h, &rho);
                let mps = vectorized_density(&product_state(s, n).unwrap()).unwrap();
                let (_, phys) = delta_squared(&mps, &commutator_mpo(&m), 1.0).unwrap();
                assert!((phys - dense).abs() < 1e-10 * dense.max(1.0), "{s}: {phys} vs {dense}");
                let direct = apply_mpo(&commutator_mpo(&m), &mps).unwrap().norm_sqr();
                assert!((direct - dense).abs() < 1e-10 * dense.max(1.0));
            }
        }
    }

    #[test]
    fn osee_of_products_and_of_the_identity_vanish() {
        let rho = DenseDensity::pure(&product_vector(InitialState::YPlus, 4).unwrap(), 4).unwrap();
        assert!(osee_exact(&rho, 2).unwrap().abs() < 1e-10);
        let d = 16;
        let id = DenseDensity::new(4, (0..d * d).map(|k| if k / d == k % d { C64::new(1.0, 0.0) } else { ZERO }).collect()).unwrap();
        assert!(osee_exact(&id, 1).unwrap().abs() < 1e-10);
        assert!(osee_exact(&id, 4).is_err());
    }

    #[test]
    fn osee_matches_the_mps_schmidt_spectrum() {
        let n = 5;
        let m = model(n);
        let spec = diagonalize(&m).unwrap();
        let rho0 = DenseDensity::pure(&product_vector(InitialState::XPlus, n).unwrap(), n).unwrap();
        let f = gaussian_filter_exact(&rho0, 0.5, &spec).unwrap();
        let mps = crate::mps::MpsVector::from_dense(&f.vectorized(), 4, n, 1 << 10, 0.0).unwrap();
        for cut in 1..n {
            let a = osee_exact(&f, cut).unwrap();
            let b = crate::mps::osee(&mps, cut).unwrap();
            assert!((a - b).abs() < 1e-9, "cut {cut}: {a} vs {b}");
        }
    }

    #[test]
    fn thermal_reference_hits_the_target_energy() {
        let n = 6;
        let m = model(n);
        let spec = diagonalize(&m).unwrap();
        let psi = product_vector(InitialState::XPlus, n).unwrap();
        let state = EigenbasisState::new(&spec, &psi, &[]).unwrap();
        let target = state.energy();
        let th = thermal_reference_from(&spec, target, &obs(n)).unwrap();
        assert!((th.energy - target).abs() <= 1e-10 * n as f64);
        assert!(th.beta > 0.0);
        // direct Gibbs expectation through the dense representation
        let w = gibbs_weights(&spec.energies, th.beta);
        let d = spec.dim();
        let mut r = vec![ZERO; d * d];
        for a in 0..d {
            r[a * d + a] = C64::new(w[a], 0.0);
        }
        let gibbs = spec.from_energy_basis(&r);
        for o in obs(n) {
            assert!((gibbs.expectation(&o).unwrap() - th.observables[&o.label]).abs() < 1e-12);
        }
        let hot = thermal_reference_from(&spec, spec.energies[d - 1] - 0.5, &[]).unwrap();
        assert!(hot.beta < 0.0);
        assert!(matches!(
            thermal_reference_from(&spec, spec.energies[0] - 1.0, &[]),
            Err(Error::EnergyOutOfRange { .. })
        ));
        assert!(thermal_reference(&m, target, &[]).unwrap().beta == th.beta);
    }

    #[test]
    fn propagator_is_unitary_and_matches_free_precession() {
        // two free spins: exp(-i t (sx + sx)) = exp(-i t sx) (x) exp(-i t sx)
        let m = SpinChainModel::new(0.0, 1.0, 0.0, 2).unwrap();
        let u = propagator(&dense_hamiltonian(&m).unwrap(), 4, 0.7);
        let (c, s) = (C64::new(0.7f64.cos(), 0.0), C64::new(0.0, -0.7f64.sin()));
        let one = [c, s, s, c];
        let want: Vec<C64> = (0..16)
            .map(|k| {
                let (r, q) = (k / 4, k % 4);
                one[(r / 2) * 2 + q / 2] * one[(r % 2) * 2 + q % 2]
            })
            .collect();
        assert!(max_diff(&u, &want) < 1e-14);
        let m = model(4);
        let u = propagator(&dense_hamiltonian(&m).unwrap(), 16, 0.1);
        let uh: Vec<C64> = (0..256).map(|k| u[(k % 16) * 16 + k / 16].conj()).collect();
        let id = matmul_rm(&uh, &u, 16, 16, 16);
        for (k, z) in id.iter().enumerate() {
            let want = if k / 16 == k % 16 { 1.0 } else { 0.0 };
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn short_time_average_of_a_z_eigenstate() {
        let m = SpinChainModel::new(1.0, 0.0, 0.3, 3).unwrap();
        let psi = product_vector(InitialState::ZPlus, 3).unwrap();
        let sz = ObservableSpec::new("sz", SIGMA_Z, 1).unwrap();
        let sx = ObservableSpec::new("sx", SIGMA_X, 1).unwrap();
        let avg = time_averaged_expectations(&m, &psi, &[sz, sx], 5.0, 0.1).unwrap();
        assert!((avg[0] - 1.0).abs() < 1e-12 && avg[1].abs() < 1e-12);
    }
}
