//! Saving and reloading recurrence vectors in the binary TNCK format.

use diagens::io::{load_mps, save_mps};
use diagens::model::{product_state, vectorized_density, InitialState};
use diagens::mps::inner;

fn main() -> diagens::Result<()> {
    let v = vectorized_density(&product_state(InitialState::YPlus, 6)?)?;
    let path = std::env::temp_dir().join("diagens-example.tnck");
    save_mps(&v, &path)?;
    let back = load_mps(&path)?;
    println!(
        "{} bytes, {} sites, <v|back> = {:.6}",
        std::fs::metadata(&path)?.len(),
        back.len(),
        inner(&v, &back)?
    );
    Ok(())
}
