//! Product states, dense round trips, SVD compression and Schmidt spectra.

use diagens::model::{product_state, InitialState};
use diagens::mps::{compress, inner, osee, schmidt_spectrum, MpsVector};
use diagens::oracle::DenseDensity;
use num_complex::Complex64 as C64;

fn main() -> diagens::Result<()> {
    let n = 8;
    let psi = product_state(InitialState::XPlus, n)?;
    println!("|X+>^{n}: bonds {:?}, norm {:.3}", psi.bond_dims(), psi.norm());

    // a GHZ-like superposition built densely, then brought into MPS form
    let dim = 1 << n;
    let mut dense = vec![C64::new(0.0, 0.0); dim];
    dense[0] = C64::new(0.8, 0.0);
    dense[dim - 1] = C64::new(0.0, 0.6);
    let ghz = MpsVector::from_dense(&dense, 2, n, 64, 0.0)?;
    println!("ghz: bonds {:?}, half-chain entropy {:.4}", ghz.bond_dims(), schmidt_spectrum(&ghz, n / 2)?.entropy());

    let (one, w) = compress(&ghz, 1, 0.0)?;
    let fid = inner(&ghz, &one)?.norm_sqr() / one.norm_sqr();
    println!("ghz compressed to bond 1: discarded {w:.3}, fidelity {fid:.3}");

    let rho = MpsVector::from_dense(&DenseDensity::pure(&dense, n)?.vectorized(), 4, n, 256, 0.0)?;
    println!("vectorized |ghz><ghz|: bonds {:?}, OSEE {:.4}", rho.bond_dims(), osee(&rho, n / 2)?);
    Ok(())
}
