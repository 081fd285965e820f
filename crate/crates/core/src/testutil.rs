use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mps::MpsVector;
use crate::tensor::DenseTensor;

pub(crate) fn random_mps(n: usize, d: usize, bond: usize, rng: &mut ChaCha8Rng, real: bool) -> MpsVector {
    let sites = (0..n)
        .map(|i| {
            let l = if i == 0 { 1 } else { bond };
            let r = if i == n - 1 { 1 } else { bond };
            DenseTensor::from_fn(vec![l, d, r], |_| {
                let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
                C64::new(rng.gen_range(-1.0..1.0), im)
            })
        })
        .collect();
    MpsVector::new(sites, d).unwrap()
}
