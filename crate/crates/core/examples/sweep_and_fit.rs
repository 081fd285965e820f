//! A config-driven sweep written to a run directory, then a power-law fit.

use diagens::experiment::{fit_power_law, load_config, run, Table};

fn main() -> diagens::Result<()> {
    let dir = std::env::temp_dir().join("diagens-sweep-example");
    let overrides: Vec<(String, String)> = [
        ("sizes", "[8]"),
        ("filter.order", "128"),
        ("filter.max_bond", "256"),
        ("filter.osee", "false"),
        ("output_dir", dir.to_str().expect("utf-8 path")),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let cfg = load_config("recipe:fig1-variance-scaling", &overrides)?;
    let summary = run(&cfg, 1)?;
    println!("wrote {} run(s) to {}", summary.outcomes.len(), summary.dir.display());
    for o in summary.failed() {
        println!("{} failed: {}", o.spec.stem(), o.failure.as_deref().unwrap_or_default());
    }
    let t = Table::read(&dir.join("N8_Xp_M128.tsv"))?;
    let f = fit_power_law(&t.column("order")?, &t.column("delta_sq")?, None)?;
    println!("delta^2 ~ M^{:.3} (r^2 = {:.4}) over M in [{}, {}]", f.slope, f.r_squared, f.range.0, f.range.1);
    Ok(())
}
