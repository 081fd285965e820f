//! Ising chain with transverse and longitudinal fields, its commutator
//! superoperator on the doubled space, and vectorized states and observables.
//!
//! A vectorized operator carries the local index `k = 2 * ket + bra`, so
//! `|n><m|` maps to the chain whose site values are `(n_i, m_i)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mps::{MpoOperator, MpsVector};
use crate::tensor::DenseTensor;

/// Row-major 2x2 local operator.
pub type LocalOp = [C64; 4];

const fn re(x: f64) -> C64 {
    C64 { re: x, im: 0.0 }
}

pub const IDENTITY: LocalOp = [re(1.0), re(0.0), re(0.0), re(1.0)];
pub const SIGMA_X: LocalOp = [re(0.0), re(1.0), re(1.0), re(0.0)];
pub const SIGMA_Y: LocalOp = [re(0.0), C64 { re: 0.0, im: -1.0 }, C64 { re: 0.0, im: 1.0 }, re(0.0)];
pub const SIGMA_Z: LocalOp = [re(1.0), re(0.0), re(0.0), re(-1.0)];
const ZERO_OP: LocalOp = [re(0.0); 4];

pub const DEFAULT_J: f64 = 1.0;
pub const DEFAULT_G: f64 = -1.05;
pub const DEFAULT_H: f64 = 0.5;
pub const DEFAULT_MARGIN: f64 = 0.01;

fn op_add(a: &LocalOp, b: &LocalOp) -> LocalOp {
    std::array::from_fn(|i| a[i] + b[i])
}

fn op_scale(a: &LocalOp, c: f64) -> LocalOp {
    std::array::from_fn(|i| a[i] * c)
}

/// `H = J sum s^z_i s^z_{i+1} + g sum s^x_i + h sum s^z_i` on an open chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainModel {
    pub j: f64,
    pub g: f64,
    pub h: f64,
    pub n: usize,
    alpha: f64,
    norm_bound: f64,
}

impl SpinChainModel {
    pub fn new(j: f64, g: f64, h: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 sites, got {n}")));
        }
        if !(j.is_finite() && g.is_finite() && h.is_finite()) {
            return Err(Error::InvalidModel("couplings must be finite".into()));
        }
        if j == 0.0 && g == 0.0 && h == 0.0 {
            return Err(Error::InvalidModel("all couplings vanish".into()));
        }
        let mut m = Self {
            j,
            g,
            h,
            n,
            alpha: 0.0,
            norm_bound: 0.0,
        };
        m.rescale_alpha(DEFAULT_MARGIN)?;
        Ok(m)
    }

    /// `(J, g, h) = (1, -1.05, 0.5)`, a robustly non-integrable point.
    pub fn with_default_couplings(n: usize) -> Result<Self> {
        Self::new(DEFAULT_J, DEFAULT_G, DEFAULT_H, n)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Sets `alpha = (1 - margin) / bound` with the triangle-inequality bound
    /// `|H_C| <= 2 [(N-1)|J| + N|g| + N|h|]`, and returns it.
    pub fn rescale_alpha(&mut self, margin: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&margin) {
            return Err(Error::InvalidModel(format!("margin {margin} outside [0, 1)")));
        }
        let n = self.n as f64;
        self.norm_bound = 2.0 * ((n - 1.0) * self.j.abs() + n * self.g.abs() + n * self.h.abs());
        self.alpha = (1.0 - margin) / self.norm_bound;
        Ok(self.alpha)
    }

    /// Single-site term `g s^x + h s^z`.
    pub fn onsite(&self) -> LocalOp {
        op_add(&op_scale(&SIGMA_X, self.g), &op_scale(&SIGMA_Z, self.h))
    }
}

/// Lower-triangular operator automaton: `w[a][b]` is the local operator for
/// the transition from state `a` to `b`. State 0 starts, the last state is done.
type Automaton = Vec<Vec<LocalOp>>;

fn ising_automaton(m: &SpinChainModel) -> Automaton {
    let mut w = vec![vec![ZERO_OP; 3]; 3];
    w[0][0] = IDENTITY;
    w[0][1] = op_scale(&SIGMA_Z, m.j);
    w[0][2] = m.onsite();
    w[1][2] = SIGMA_Z;
    w[2][2] = IDENTITY;
    w
}

/// Site tensors of an automaton with `d x d` local blocks given by `block`.
fn automaton_sites(chi: usize, d: usize, n: usize, block: impl Fn(usize, usize, usize, usize) -> C64) -> Vec<DenseTensor> {
    let bulk = DenseTensor::from_fn(vec![chi, d, d, chi], |i| block(i[0], i[3], i[1], i[2]));
    let first = DenseTensor::from_fn(vec![1, d, d, chi], |i| bulk.get(&[0, i[1], i[2], i[3]]));
    let last = DenseTensor::from_fn(vec![chi, d, d, 1], |i| bulk.get(&[i[0], i[1], i[2], chi - 1]));
    (0..n)
        .map(|i| match i {
            0 if n == 1 => DenseTensor::from_fn(vec![1, d, d, 1], |k| bulk.get(&[0, k[1], k[2], chi - 1])),
            0 => first.clone(),
            _ if i == n - 1 => last.clone(),
            _ => bulk.clone(),
        })
        .collect()
}

/// Bond-3 MPO of the Hamiltonian on local dimension 2.
pub fn ising_mpo(m: &SpinChainModel) -> MpoOperator {
    let w = ising_automaton(m);
    let sites = automaton_sites(3, 2, m.n, |a, b, s, t| w[a][b][2 * s + t]);
    MpoOperator::new(sites, 2).expect("consistent construction")
}

/// `(A ⊗ 1)[(s,s'),(t,t')] = A[s,t] δ[s',t']`.
pub fn ket_op(a: &LocalOp) -> [C64; 16] {
    std::array::from_fn(|idx| {
        let (row, col) = (idx / 4, idx % 4);
        let (s, sp, t, tp) = (row / 2, row % 2, col / 2, col % 2);
        if sp == tp {
            a[2 * s + t]
        } else {
            re(0.0)
        }
    })
}

/// `(1 ⊗ Bᵀ)[(s,s'),(t,t')] = δ[s,t] B[t',s']`.
pub fn bra_op(b: &LocalOp) -> [C64; 16] {
    std::array::from_fn(|idx| {
        let (row, col) = (idx / 4, idx % 4);
        let (s, sp, t, tp) = (row / 2, row % 2, col / 2, col % 2);
        if s == t {
            b[2 * tp + sp]
        } else {
            re(0.0)
        }
    })
}

/// Commutator automaton `H ⊗ 1 - 1 ⊗ Hᵀ`: shared start and done states,
/// with the inner states of `H` duplicated for the ket and the bra copy.
fn commutator_automaton(w: &Automaton) -> Vec<Vec<[C64; 16]>> {
    let chi = w.len();
    let inner = chi - 2;
    let size = 2 * inner + 2;
    let done = size - 1;
    let ket_state = |k: usize| k; // 1..=inner
    let bra_state = |k: usize| k + inner;
    let mut c = vec![vec![[re(0.0); 16]; size]; size];
    let neg = |x: [C64; 16]| x.map(|z| -z);
    c[0][0] = ket_op(&IDENTITY);
    c[done][done] = ket_op(&IDENTITY);
    let start_done = w[0][chi - 1];
    c[0][done] = std::array::from_fn(|i| ket_op(&start_done)[i] - bra_op(&start_done)[i]);
    for k in 1..=inner {
        c[0][ket_state(k)] = ket_op(&w[0][k]);
        c[0][bra_state(k)] = neg(bra_op(&w[0][k]));
        c[ket_state(k)][done] = ket_op(&w[k][chi - 1]);
        c[bra_state(k)][done] = bra_op(&w[k][chi - 1]);
        for l in 1..=inner {
            c[ket_state(k)][ket_state(l)] = ket_op(&w[k][l]);
            c[bra_state(k)][bra_state(l)] = bra_op(&w[k][l]);
        }
    }
    c
}

/// MPO of `Ĥ_C = H ⊗ 1 - 1 ⊗ Hᵀ` on local dimension 4 (bond 4).
pub fn commutator_mpo(m: &SpinChainModel) -> MpoOperator {
    let c = commutator_automaton(&ising_automaton(m));
    let chi = c.len();
    let sites = automaton_sites(chi, 4, m.n, |a, b, s, t| c[a][b][4 * s + t]);
    MpoOperator::new(sites, 4).expect("consistent construction")
}

/// `alpha * Ĥ_C`, whose spectrum lies strictly inside `[-1, 1]`.
pub fn scaled_commutator_mpo(m: &SpinChainModel) -> MpoOperator {
    let mut o = commutator_mpo(m);
    o.scale(re(m.alpha()));
    o
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitialState {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    ZPlus,
    ZMinus,
}

impl InitialState {
    pub const ALL: [InitialState; 6] = [
        Self::XPlus,
        Self::XMinus,
        Self::YPlus,
        Self::YMinus,
        Self::ZPlus,
        Self::ZMinus,
    ];

    /// Single-spin state, with `|0>` the `s^z = +1` eigenvector.
    pub fn local_vector(self) -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::XPlus => [re(r), re(r)],
            Self::XMinus => [re(r), re(-r)],
            Self::YPlus => [re(r), C64::new(0.0, r)],
            Self::YMinus => [re(r), C64::new(0.0, -r)],
            Self::ZPlus => [re(1.0), re(0.0)],
            Self::ZMinus => [re(0.0), re(1.0)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::XPlus => "X+",
            Self::XMinus => "X-",
            Self::YPlus => "Y+",
            Self::YMinus => "Y-",
            Self::ZPlus => "Z+",
            Self::ZMinus => "Z-",
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace("PLUS", "+").replace("MINUS", "-");
        Self::ALL
            .into_iter()
            .find(|st| st.label() == norm)
            .ok_or_else(|| Error::Config(format!("unknown initial state {s:?}")))
    }
}

/// `|s>^{⊗N}` on local dimension 2.
pub fn product_state(s: InitialState, n: usize) -> Result<MpsVector> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("need at least 2 sites, got {n}")));
    }
    MpsVector::product(&vec![s.local_vector().to_vec(); n])
}

/// `|psi><psi|` vectorized by the `2 * ket + bra` convention; site values
/// `psi_s conj(psi_s')`.
pub fn vectorized_density(psi: &MpsVector) -> Result<MpsVector> {
    if psi.phys_dim() != 2 || psi.max_bond() != 1 {
        return Err(Error::NotProductState);
    }
    let local: Vec<Vec<C64>> = psi
        .sites()
        .iter()
        .map(|t| {
            let v = t.data();
            (0..4).map(|k| v[k / 2] * v[k % 2].conj()).collect()
        })
        .collect();
    MpsVector::product(&local)
}

/// `op` on `site`, identity elsewhere, vectorized.
pub fn vectorized_op(op: &LocalOp, site: usize, n: usize) -> Result<MpsVector> {
    if site >= n {
        return Err(Error::SiteOutOfRange { index: site, len: n });
    }
    let local: Vec<Vec<C64>> = (0..n)
        .map(|i| if i == site { op.to_vec() } else { IDENTITY.to_vec() })
        .collect();
    MpsVector::product(&local)
}

pub fn vectorized_identity(n: usize) -> MpsVector {
    MpsVector::product(&vec![IDENTITY.to_vec(); n]).expect("non-empty chain")
}

/// Vectorization of the adjoint: swap ket and bra on every site and conjugate.
pub fn adjoint_vectorized(v: &MpsVector) -> Result<MpsVector> {
    if v.phys_dim() != 4 {
        return Err(Error::DimensionMismatch("adjoint needs a vectorized operator".into()));
    }
    let sites = v
        .sites()
        .iter()
        .map(|t| {
            let s = t.shape();
            DenseTensor::from_fn(s.to_vec(), |i| {
                let k = i[1];
                let swapped = 2 * (k % 2) + k / 2;
                t.get(&[i[0], swapped, i[2]]).conj()
            })
        })
        .collect();
    MpsVector::new(sites, 4)
}
