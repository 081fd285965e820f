//! Jackson-damped Chebyshev series of the delta function against a Gaussian.

use diagens::chebyshev::{jackson_coeff, series_coeff, series_value, sigma_for_order, JacksonForm};

fn main() -> diagens::Result<()> {
    let order = 64;
    println!("g_m^{order}: {:?}", (0..5).map(|m| jackson_coeff(m, order)).collect::<diagens::Result<Vec<_>>>()?);
    println!("c_k:      {:?}", (0..5).map(|k| series_coeff(k, order)).collect::<diagens::Result<Vec<_>>>()?);
    let w = sigma_for_order(order, 1.0)?;
    println!("nominal width {:.4}", w.rescaled);

    // the damped series is close to a normalized Gaussian of width pi/M
    let s = std::f64::consts::PI / order as f64;
    println!("{:>8} {:>12} {:>12} {:>12}", "x", "q_M(x)", "gaussian", "printed form");
    for k in 0..=8 {
        let x = k as f64 * s / 2.0;
        let g = (-(x * x) / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s);
        println!(
            "{x:8.4} {:12.5} {g:12.5} {:12.5}",
            series_value(x, order, JacksonForm::Standard),
            series_value(x, order, JacksonForm::Printed)
        );
    }
    Ok(())
}
