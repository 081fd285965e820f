//! Exact operator-space entanglement entropy of the filtered state against 1/delta.

use diagens::chebyshev::JacksonForm;
use diagens::model::{InitialState, SpinChainModel};
use diagens::oracle::{chebyshev_kernel, diagonalize, osee_exact, product_vector, EigenbasisState};

fn main() -> diagens::Result<()> {
    let n = 8;
    let model = SpinChainModel::with_default_couplings(n)?;
    let eig = diagonalize(&model)?;
    let state = EigenbasisState::new(&eig, &product_vector(InitialState::XPlus, n)?, &[])?;
    let diag = osee_exact(&state.density(|x| if x == 0.0 { 1.0 } else { 0.0 }), n / 2)?;
    println!("{:>5} {:>9} {:>7}", "M", "1/delta", "OSEE");
    for m in [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024] {
        let k = chebyshev_kernel(m, model.alpha(), JacksonForm::Standard)?;
        let mom = state.filtered(&k)?;
        println!("{m:5} {:9.3} {:7.4}", 1.0 / mom.delta_sq.sqrt(), osee_exact(&state.density(&k), n / 2)?);
    }
    println!("diagonal ensemble OSEE {diag:.4}");
    Ok(())
}
