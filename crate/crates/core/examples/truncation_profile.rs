//! Bond dimension needed to hold T_m(H_C)|rho0> at fixed overlap precision.

use diagens::chebyshev::{run_filter, FilterConfig};
use diagens::experiment::truncation_profile;
use diagens::model::{product_state, scaled_commutator_mpo, vectorized_density, InitialState, SpinChainModel};

fn main() -> diagens::Result<()> {
    let n = 10;
    let model = SpinChainModel::with_default_couplings(n)?;
    let rho0 = vectorized_density(&product_state(InitialState::XPlus, n)?)?;
    let mut cfg = FilterConfig::new(32, 512);
    cfg.rel_tol = 1e-12;
    cfg.exact_bond_limit = 512;
    cfg.checkpoint_orders = vec![32];
    cfg.probes.osee = false;
    cfg.store_degrees = vec![0, 4, 8, 12, 16, 24, 32];
    let run = run_filter(&rho0, &scaled_commutator_mpo(&model), model.alpha(), &cfg)?;
    let tols = [1e-2, 1e-3, 1e-4, 1e-5];
    let rows = truncation_profile(&run.stored, &tols)?;
    println!("{:>4} {}", "m", tols.map(|t| format!("{t:>7.0e}")).join(""));
    for chunk in rows.chunks(tols.len()) {
        println!("{:4} {}", chunk[0].degree, chunk.iter().map(|p| format!("{:7}", p.required_bond)).collect::<String>());
    }
    Ok(())
}
