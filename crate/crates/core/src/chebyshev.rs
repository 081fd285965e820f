//! Jackson-damped Chebyshev approximation of the Gaussian energy filter,
//! driven as a three-term recurrence on matrix product states.
//!
//! The filter of order `M` is `Q_M = sum_k c_k^M T_{2k}(alpha Ĥ_C)` with
//! `c_k^M = (-1)^k (2 - [k = 0]) / pi * g_{2k}^M`. Because the damping
//! `g_m^M` depends on `M`, a run keeps one accumulator per checkpoint order
//! and reports each checkpoint as the genuine order-`M'` filter.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::env::{fit_sum, FitOptions, Term};
use crate::error::{Error, Result};
use crate::mps::{apply_mpo, compress, osee, MpoOperator, MpsVector};
use crate::observables::{delta_squared, expectation, frobenius_sq, trace_overlap, ObservableSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JacksonForm {
    /// `[(M-m+1) cos(pi m/(M+1)) + sin(pi m/(M+1)) cot(pi/(M+1))] / (M+1)`.
    #[default]
    Standard,
    /// The same with `cos(pi/(M+1))` in place of the cotangent.
    Printed,
}

/// Jackson damping factor `g_m^M` in the standard form.
pub fn jackson_coeff(m: usize, order: usize) -> Result<f64> {
    jackson_coeff_with(m, order, JacksonForm::Standard)
}

pub fn jackson_coeff_with(m: usize, order: usize, form: JacksonForm) -> Result<f64> {
    if m > order {
        return Err(Error::OrderOutOfRange { index: m, order });
    }
    let p = (order + 1) as f64;
    let th = PI * m as f64 / p;
    let tail = match form {
        JacksonForm::Standard => 1.0 / (PI / p).tan(),
        JacksonForm::Printed => (PI / p).cos(),
    };
    Ok(((p - m as f64) * th.cos() + th.sin() * tail) / p)
}

/// Weight of `T_{2k}` in `Q_M`.
pub fn series_coeff(k: usize, order: usize) -> Result<f64> {
    series_coeff_with(k, order, JacksonForm::Standard)
}

pub fn series_coeff_with(k: usize, order: usize, form: JacksonForm) -> Result<f64> {
    if 2 * k > order {
        return Err(Error::OrderOutOfRange { index: 2 * k, order });
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let delta = if k == 0 { 1.0 } else { 2.0 };
    Ok(sign * delta / PI * jackson_coeff_with(2 * k, order, form)?)
}

/// Scalar filter `q_M(x) = sum_k c_k T_{2k}(x)`, evaluated by Clenshaw in `2x^2 - 1`.
pub fn series_value(x: f64, order: usize, form: JacksonForm) -> f64 {
    let coeffs: Vec<f64> = (0..=order / 2)
        .map(|k| series_coeff_with(k, order, form).expect("k within order"))
        .collect();
    clenshaw(&coeffs, 2.0 * x * x - 1.0)
}

/// `sum_k a_k T_k(y)`.
pub(crate) fn clenshaw(a: &[f64], y: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ak in a.iter().rev() {
        let b0 = ak + 2.0 * y * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 - y * b2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterWidth {
    pub rescaled: f64,
    pub physical: f64,
}

/// Gaussian width `sqrt(pi)/M` approximated by `Q_M`, in rescaled and physical units.
pub fn sigma_for_order(order: usize, alpha: f64) -> Result<FilterWidth> {
    if order < 2 {
        return Err(Error::InvalidFilterConfig(format!("order {order} below 2 has no width")));
    }
    let rescaled = PI.sqrt() / order as f64;
    Ok(FilterWidth {
        rescaled,
        physical: rescaled / alpha,
    })
}

/// Even orders `16, 24, 32, 48, 64, 96, ...` up to `order`, plus `order` itself.
pub fn log_schedule(order: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut base = 16;
    while base <= order {
        out.push(base);
        let mid = base * 3 / 2;
        if mid <= order {
            out.push(mid);
        }
        base *= 2;
    }
    if out.last() != Some(&order) && order > 0 {
        out.push(order);
    }
    out.retain(|&m| m <= order);
    out
}

/// What to measure at each checkpoint.
#[derive(Clone, Debug)]
pub struct Probes {
    pub observables: Vec<ObservableSpec>,
    pub delta: bool,
    pub osee: bool,
}

impl Default for Probes {
    fn default() -> Self {
        Self {
            observables: Vec::new(),
            delta: true,
            osee: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FilterConfig {
    /// Series order `M` (even).
    pub order: usize,
    pub max_bond: usize,
    pub rel_tol: f64,
    /// Even orders `<= M` at which the order-`M'` filter is measured.
    pub checkpoint_orders: Vec<usize>,
    /// Cumulative discarded weight beyond which a run is aborted.
    pub abort_threshold: f64,
    pub jackson: JacksonForm,
    pub probes: Probes,
    /// Degrees `m` whose recurrence vectors are kept for later analysis.
    pub store_degrees: Vec<usize>,
    pub exact_bond_limit: usize,
    pub max_half_sweeps: usize,
}

impl FilterConfig {
    pub fn new(order: usize, max_bond: usize) -> Self {
        Self {
            order,
            max_bond,
            rel_tol: 1e-8,
            checkpoint_orders: log_schedule(order),
            abort_threshold: 1e-2,
            jackson: JacksonForm::Standard,
            probes: Probes::default(),
            store_degrees: Vec::new(),
            exact_bond_limit: 256,
            max_half_sweeps: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFilterConfig(msg));
        if !self.order.is_multiple_of(2) {
            return bad(format!("order {} is odd", self.order));
        }
        if self.max_bond == 0 {
            return bad("max_bond must be positive".into());
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return bad(format!("rel_tol {} must be non-negative", self.rel_tol));
        }
        if !self.checkpoint_orders.windows(2).all(|w| w[0] < w[1]) {
            return bad("checkpoint orders must be strictly ascending".into());
        }
        if let Some(&m) = self.checkpoint_orders.iter().find(|&&m| m % 2 != 0 || m > self.order) {
            return bad(format!("checkpoint order {m} is odd or exceeds {}", self.order));
        }
        Ok(())
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_bond: self.max_bond,
            rel_tol: self.rel_tol,
            exact_bond_limit: self.exact_bond_limit,
            max_half_sweeps: self.max_half_sweeps.max(2),
            ..FitOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRecord {
    pub order: usize,
    pub sigma: Option<FilterWidth>,
    pub delta_sq: f64,
    pub delta_sq_physical: f64,
    pub frobenius_sq: f64,
    pub trace: C64,
    pub osee_half: f64,
    pub observables: BTreeMap<String, f64>,
    pub imag_residues: BTreeMap<String, f64>,
    pub max_bond_used: usize,
    pub cumulative_discarded_weight: f64,
}

/// A partially accumulated filter of a given order.
#[derive(Clone, Debug)]
pub struct Accumulator {
    pub order: usize,
    pub vec: MpsVector,
    /// Discarded weight of this accumulator's own compressions.
    pub discarded: f64,
}

#[derive(Clone, Debug)]
pub struct FilterRun {
    pub t_prev: Option<MpsVector>,
    pub t_curr: MpsVector,
    /// The order-`M` accumulator.
    pub accumulator: Accumulator,
    /// Accumulators for checkpoint orders still to be reached.
    pub pending: Vec<Accumulator>,
    pub order_done: usize,
    pub checkpoints: Vec<CheckpointRecord>,
    /// Summed discarded weight of the recurrence vectors.
    pub recurrence_discarded: f64,
    pub stored: Vec<(usize, MpsVector)>,
    pub alpha: f64,
    pub max_recurrence_bond: usize,
}

impl FilterRun {
    /// Order-0 state: `T_0 = rho0`, every accumulator `rho0 / pi`.
    pub fn start(rho0: &MpsVector, alpha: f64, cfg: &FilterConfig) -> Result<Self> {
        cfg.validate()?;
        if rho0.phys_dim() != 4 {
            return Err(Error::DimensionMismatch("the filter acts on vectorized operators".into()));
        }
        let c0 = C64::new(series_coeff(0, cfg.order)?, 0.0);
        let seed = rho0.scaled(c0);
        let pending = cfg
            .checkpoint_orders
            .iter()
            .filter(|&&m| m != cfg.order)
            .map(|&m| Accumulator {
                order: m,
                vec: seed.clone(),
                discarded: 0.0,
            })
            .collect();
        let mut run = Self {
            t_prev: None,
            t_curr: rho0.clone(),
            accumulator: Accumulator {
                order: cfg.order,
                vec: seed,
                discarded: 0.0,
            },
            pending,
            order_done: 0,
            checkpoints: Vec::new(),
            recurrence_discarded: 0.0,
            stored: Vec::new(),
            alpha,
            max_recurrence_bond: rho0.max_bond(),
        };
        if cfg.store_degrees.contains(&0) {
            run.stored.push((0, rho0.clone()));
        }
        Ok(run)
    }

    pub fn is_done(&self, cfg: &FilterConfig) -> bool {
        self.order_done >= cfg.order
    }

    /// Discarded-weight budget of the filter of order `m` so far.
    pub fn cumulative_discarded(&self, acc: &Accumulator) -> f64 {
        self.recurrence_discarded + acc.discarded
    }

    /// Advances the recurrence by one degree with the rescaled commutator `h_c`.
    pub fn advance(&mut self, h_c: &MpoOperator, cfg: &FilterConfig) -> Result<()> {
        if self.order_done >= cfg.order {
            return Err(Error::InvalidFilterConfig(format!(
                "run already reached order {}",
                cfg.order
            )));
        }
        let opts = cfg.fit_options();
        let m = self.order_done + 1;
        let (next, w) = match &self.t_prev {
            None => compress(&apply_mpo(h_c, &self.t_curr)?, cfg.max_bond, cfg.rel_tol)?,
            Some(prev) => {
                let terms = [
                    Term::applied(C64::new(2.0, 0.0), h_c, &self.t_curr),
                    Term::plain(C64::new(-1.0, 0.0), prev),
                ];
                let out = fit_sum(&terms, &self.t_curr, &opts)?;
                (out.vec, out.discarded_weight)
            }
        };
        self.recurrence_discarded += w;
        self.max_recurrence_bond = self.max_recurrence_bond.max(next.max_bond());
        self.t_prev = Some(std::mem::replace(&mut self.t_curr, next));
        self.order_done = m;
        if cfg.store_degrees.contains(&m) {
            self.stored.push((m, self.t_curr.clone()));
        }

        if m.is_multiple_of(2) {
            let k = m / 2;
            let accs = self.pending.iter_mut().chain(std::iter::once(&mut self.accumulator));
            for acc in accs.filter(|a| a.order >= m) {
                let c = series_coeff_with(k, acc.order, cfg.jackson)?;
                let terms = [
                    Term::plain(C64::new(1.0, 0.0), &acc.vec),
                    Term::plain(C64::new(c, 0.0), &self.t_curr),
                ];
                let out = fit_sum(&terms, &acc.vec, &opts)?;
                acc.vec = out.vec;
                acc.discarded += out.discarded_weight;
            }
        }

        let budget = self.recurrence_discarded + self.accumulator.discarded;
        if budget > cfg.abort_threshold {
            return Err(Error::TruncationBudgetExceeded {
                order: m,
                weight: budget,
                threshold: cfg.abort_threshold,
            });
        }

        if cfg.checkpoint_orders.contains(&m) {
            let acc = if m == cfg.order {
                self.accumulator.clone()
            } else {
                let pos = self
                    .pending
                    .iter()
                    .position(|a| a.order == m)
                    .expect("pending accumulator for every checkpoint");
                self.pending.remove(pos)
            };
            let rec = self.measure(&acc, h_c, cfg)?;
            self.checkpoints.push(rec);
        }
        Ok(())
    }

    /// Records metrics of a completed accumulator.
    pub fn measure(&self, acc: &Accumulator, h_c: &MpoOperator, cfg: &FilterConfig) -> Result<CheckpointRecord> {
        let rho = &acc.vec;
        let n = rho.len();
        let (delta_sq, delta_sq_physical) = if cfg.probes.delta {
            delta_squared(rho, h_c, self.alpha)?
        } else {
            (f64::NAN, f64::NAN)
        };
        let osee_half = if cfg.probes.osee { osee(rho, n / 2)? } else { f64::NAN };
        let mut observables = BTreeMap::new();
        let mut imag_residues = BTreeMap::new();
        for spec in &cfg.probes.observables {
            let e = expectation(rho, spec)?;
            observables.insert(spec.label.clone(), e.value);
            imag_residues.insert(spec.label.clone(), e.imag_residue);
        }
        Ok(CheckpointRecord {
            order: acc.order,
            sigma: sigma_for_order(acc.order, self.alpha).ok(),
            delta_sq,
            delta_sq_physical,
            frobenius_sq: frobenius_sq(rho)?,
            trace: trace_overlap(rho)?,
            osee_half,
            observables,
            imag_residues,
            max_bond_used: rho.max_bond(),
            cumulative_discarded_weight: self.cumulative_discarded(acc),
        })
    }

    /// The accumulated order-`M` filter applied to the initial state.
    pub fn rho(&self) -> &MpsVector {
        &self.accumulator.vec
    }
}

/// Runs the recurrence to order `M`, recording every scheduled checkpoint.
/// An order-0 checkpoint is measured on `rho0 / pi` before advancing.
pub fn run_filter(rho0: &MpsVector, h_c: &MpoOperator, alpha: f64, cfg: &FilterConfig) -> Result<FilterRun> {
    let mut run = FilterRun::start(rho0, alpha, cfg)?;
    run.finish(h_c, cfg)?;
    Ok(run)
}

impl FilterRun {
    /// Advances to the final order. On error the checkpoints recorded so far
    /// stay available.
    pub fn finish(&mut self, h_c: &MpoOperator, cfg: &FilterConfig) -> Result<()> {
        let zero_pending = self.order_done == 0
            && cfg.checkpoint_orders.first() == Some(&0)
            && !self.checkpoints.iter().any(|c| c.order == 0);
        if zero_pending {
            let acc = if cfg.order == 0 {
                self.accumulator.clone()
            } else {
                let pos = self.pending.iter().position(|a| a.order == 0).expect("order-0 accumulator");
                self.pending.remove(pos)
            };
            let rec = self.measure(&acc, h_c, cfg)?;
            self.checkpoints.push(rec);
        }
        while !self.is_done(cfg) {
            self.advance(h_c, cfg)?;
        }
        Ok(())
    }
}
