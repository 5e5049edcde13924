//! Cross-check a model end to end and print the report.

use wildkac::models::build_dgp;
use wildkac::validate::{validate_model, ValidateConfig};

fn main() -> wildkac::Result<()> {
    let spec = build_dgp(1.0, 0.2, 0.05).to_spec();
    let report = validate_model(&spec, &ValidateConfig::default())?;
    for c in &report.checks {
        println!("{} {:<46} {:.2e} (tol {:.0e})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.observed, c.tolerance);
    }
    println!("all pass: {}", report.all_pass);
    Ok(())
}
