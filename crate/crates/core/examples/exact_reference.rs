//! Dense references: diagonal ensemble, long-time average, thermal state, IPR.

use diagens::model::{InitialState, SpinChainModel};
use diagens::observables::ObservableSpec;
use diagens::oracle::{
    diagonal_ensemble, diagonalize, ipr, product_vector, thermal_reference_from, time_averaged_expectations,
    EigenbasisState,
};

fn main() -> diagens::Result<()> {
    let n = 8;
    let model = SpinChainModel::with_default_couplings(n)?;
    let eig = diagonalize(&model)?;
    println!("N = {n}: min level gap {:.2e}, degenerate: {}", eig.min_gap(), eig.has_degeneracy());
    let obs = [ObservableSpec::sigma_x(n), ObservableSpec::sigma_z(n)];
    for s in [InitialState::XPlus, InitialState::ZPlus, InitialState::YPlus] {
        let psi = product_vector(s, n)?;
        let de = diagonal_ensemble(&psi, &eig)?;
        let energy = EigenbasisState::new(&eig, &psi, &obs)?.energy();
        let th = thermal_reference_from(&eig, energy, &obs)?;
        let avg = time_averaged_expectations(&model, &psi, &obs, 2000.0, 0.05)?;
        println!("|{}>: E = {energy:.4}, beta = {:.4}, IPR = {:.3e}", s.label(), th.beta, ipr(&psi, &eig)?);
        for (o, a) in obs.iter().zip(&avg) {
            println!(
                "  {}: diagonal {:.5}, time average {a:.5}, thermal {:.5}",
                o.label,
                de.expectation(o)?,
                th.observables[&o.label]
            );
        }
    }
    Ok(())
}
