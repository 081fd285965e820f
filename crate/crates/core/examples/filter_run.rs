//! Chebyshev filtering of |X+><X+| on an MPS, with per-order checkpoints.
//! Usage: filter_run [N] [M] [max_bond]

use diagens::chebyshev::{run_filter, FilterConfig};
use diagens::model::{product_state, scaled_commutator_mpo, vectorized_density, InitialState, SpinChainModel};
use diagens::observables::ObservableSpec;

fn main() -> diagens::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, order, bond) = (*args.first().unwrap_or(&10), *args.get(1).unwrap_or(&64), *args.get(2).unwrap_or(&64));
    let model = SpinChainModel::with_default_couplings(n)?;
    let rho0 = vectorized_density(&product_state(InitialState::XPlus, n)?)?;
    let mut cfg = FilterConfig::new(order, bond);
    cfg.probes.observables = vec![ObservableSpec::sigma_x(n), ObservableSpec::sigma_z(n)];
    let run = run_filter(&rho0, &scaled_commutator_mpo(&model), model.alpha(), &cfg)?;
    println!("{:>5} {:>11} {:>10} {:>9} {:>8} {:>8} {:>7} {:>5} {:>9}", "M", "delta^2", "<rho|rho>", "<1|rho>", "sx", "sz", "OSEE", "D", "discarded");
    for c in &run.checkpoints {
        println!(
            "{:5} {:11.4e} {:10.3} {:9.4} {:8.4} {:8.4} {:7.3} {:5} {:9.2e}",
            c.order, c.delta_sq_physical, c.frobenius_sq, c.trace.re, c.observables["sx"], c.observables["sz"], c.osee_half, c.max_bond_used, c.cumulative_discarded_weight
        );
    }
    Ok(())
}
