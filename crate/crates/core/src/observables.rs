//! Measurements on vectorized (unnormalized) density matrices.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::env::overlap;
use crate::error::{Error, Result};
use crate::model::{vectorized_identity, vectorized_op, LocalOp, IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z};
use crate::mps::{adjoint_product, inner, MpoOperator, MpsVector};

/// A single-site Hermitian observable. `site` is 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpec {
    pub label: String,
    pub operator: LocalOp,
    pub site: usize,
}

/// 0-based index of the 1-based middle site `floor(N/2)`.
pub fn mid_chain(n: usize) -> usize {
    (n / 2).saturating_sub(1)
}

impl ObservableSpec {
    pub fn new(label: impl Into<String>, operator: LocalOp, site: usize) -> Result<Self> {
        let dev = (operator[1] - operator[2].conj())
            .norm()
            .max(operator[0].im.abs())
            .max(operator[3].im.abs());
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            label: label.into(),
            operator,
            site,
        })
    }

    pub fn sigma_x(n: usize) -> Self {
        Self::new("sx", SIGMA_X, mid_chain(n)).expect("Hermitian")
    }

    pub fn sigma_z(n: usize) -> Self {
        Self::new("sz", SIGMA_Z, mid_chain(n)).expect("Hermitian")
    }

    /// Parses `sx`, `sy`, `sz` or `id`, optionally suffixed `@k` with a
    /// 1-based site `k`; without a suffix the middle site is used.
    pub fn parse(label: &str, n: usize) -> Result<Self> {
        let (name, site) = match label.split_once('@') {
            Some((name, k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("bad site in observable {label:?}")))?;
                if k == 0 || k > n {
                    return Err(Error::SiteOutOfRange { index: k, len: n });
                }
                (name, k - 1)
            }
            None => (label, mid_chain(n)),
        };
        let op = match name {
            "sx" => SIGMA_X,
            "sy" => SIGMA_Y,
            "sz" => SIGMA_Z,
            "id" => IDENTITY,
            _ => return Err(Error::Config(format!("unknown observable {label:?}"))),
        };
        Self::new(label, op, site)
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub value: f64,
    /// Imaginary part of the ratio; nonzero only through broken Hermiticity.
    pub imag_residue: f64,
}

/// `<1|rho>`.
pub fn trace_overlap(rho: &MpsVector) -> Result<C64> {
    inner(&vectorized_identity(rho.len()), rho)
}

/// `<rho|rho>`.
pub fn frobenius_sq(rho: &MpsVector) -> Result<f64> {
    Ok(inner(rho, rho)?.re.max(0.0))
}

/// `tr(O rho) / tr(rho)` for a vectorized `rho`.
pub fn expectation(rho: &MpsVector, spec: &ObservableSpec) -> Result<Expectation> {
    if rho.phys_dim() != 4 {
        return Err(Error::DimensionMismatch("expectation needs a vectorized operator".into()));
    }
    let trace = trace_overlap(rho)?;
    let norm = rho.norm();
    if trace.norm() < 1e-12 * norm || trace.norm() == 0.0 {
        return Err(Error::DegenerateNormalization {
            trace: trace.norm(),
            norm,
        });
    }
    let num = inner(&vectorized_op(&spec.operator, spec.site, rho.len())?, rho)?;
    let z = num / trace;
    Ok(Expectation {
        value: z.re,
        imag_residue: z.im,
    })
}

/// `|H_C rho|^2 / |rho|^2` for the rescaled commutator, and the same divided by `alpha^2`.
pub fn delta_squared(rho: &MpsVector, h_c: &MpoOperator, alpha: f64) -> Result<(f64, f64)> {
    let norm_sq = frobenius_sq(rho)?;
    if norm_sq == 0.0 {
        return Err(Error::DegenerateNormalization { trace: 0.0, norm: 0.0 });
    }
    let applied = overlap(rho, None, Some(&adjoint_product(h_c, h_c)?), rho)?.re;
    let rescaled = applied / norm_sq;
    Ok((rescaled, rescaled / (alpha * alpha)))
}

/// Mean and variance of a Hermitian MPO `h` in the pure state `psi`.
pub fn energy_moments(h: &MpoOperator, psi: &MpsVector) -> Result<(f64, f64)> {
    let norm_sq = psi.norm_sqr();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateNormalization { trace: 0.0, norm: 0.0 });
    }
    let mean = overlap(psi, None, Some(h), psi)?.re / norm_sq;
    let second = overlap(psi, None, Some(&adjoint_product(h, h)?), psi)?.re / norm_sq;
    Ok((mean, (second - mean * mean).max(0.0)))
}
