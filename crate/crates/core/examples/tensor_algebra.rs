//! Contraction, truncated SVD and QR on small dense tensors.

use diagens::tensor::{contract, qr_orthogonalize, svd_truncate, DenseTensor};
use num_complex::Complex64 as C64;

fn main() -> diagens::Result<()> {
    // a rank-3 tensor (2, 3, 4) with a smooth spectrum across the (0 | 1 2) cut
    let t = DenseTensor::from_fn(vec![2, 3, 4], |i| {
        C64::new(1.0 / (1.0 + (i[0] + 2 * i[1] + 3 * i[2]) as f64), 0.1 * i[1] as f64)
    });
    let m = DenseTensor::from_fn(vec![4, 5], |i| C64::new((i[0] * 5 + i[1]) as f64, 0.0));
    let tm = contract(&t, &m, &[(2, 0)])?;
    println!("contract (2,3,4) x (4,5) over one axis -> shape {:?}", tm.shape());

    for tol in [0.0, 1e-4, 1e-2] {
        let f = svd_truncate(&t, &[0, 1], 6, tol)?;
        let back = contract(&f.left_weighted(), &f.right_factor, &[(2, 0)])?;
        println!(
            "svd_truncate rel_tol {tol:.0e}: rank {} discarded {:.3e} reconstruction error {:.3e}",
            f.rank(),
            f.discarded_weight,
            (back.max_abs_diff(&t))
        );
    }

    let (q, r) = qr_orthogonalize(&t, &[0, 1])?;
    let qq = contract(&q.conj(), &q, &[(0, 0), (1, 1)])?;
    let qr = contract(&q, &r, &[(2, 0)])?;
    println!(
        "qr: |Q^dag Q - 1| = {:.1e}, |QR - T| = {:.1e}",
        qq.max_abs_diff(&DenseTensor::identity(qq.shape()[0])),
        qr.max_abs_diff(&t)
    );
    Ok(())
}
