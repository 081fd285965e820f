//! The mixed-field Ising chain: rescaling, MPO bonds and the commutator spectrum.

use diagens::model::{commutator_mpo, ising_mpo, scaled_commutator_mpo, SpinChainModel};
use diagens::oracle::{dense_hamiltonian, diagonalize};

fn main() -> diagens::Result<()> {
    for n in [4, 8, 20, 60] {
        let m = SpinChainModel::with_default_couplings(n)?;
        println!("N = {n:2}: norm bound {:7.3}, alpha {:.5}", m.norm_bound(), m.alpha());
    }
    let m = SpinChainModel::with_default_couplings(6)?;
    println!("H bonds {:?}", ising_mpo(&m).bond_dims());
    println!("H_C bonds {:?}", commutator_mpo(&m).bond_dims());

    let dense = dense_hamiltonian(&m)?;
    let eig = diagonalize(&m)?;
    let (lo, hi) = (eig.energies[0], eig.energies[eig.dim() - 1]);
    println!(
        "spectrum [{lo:.4}, {hi:.4}], alpha (E_max - E_min) = {:.4} < 1, reconstruction error {:.1e}",
        m.alpha() * (hi - lo),
        eig.reconstruction_error(&dense)
    );
    let hc = scaled_commutator_mpo(&m).to_dense();
    let norm: f64 = hc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    println!("|alpha H_C|_F = {norm:.4}");
    Ok(())
}
