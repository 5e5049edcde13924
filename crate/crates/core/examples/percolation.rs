//! Information percolation: agents pool what they know in meetings of size
//! m and occasionally fall back to a fresh draw.

use wildkac::models::{build_percolation, PercolationModel};
use wildkac::wildsum::{wild_sum, wild_sum_two_kernel, SeriesParams};

fn main() -> wildkac::Result<()> {
    let cap = 16;
    let mut pi = vec![0.0; cap + 1];
    pi[1] = 1.0;
    for m in [2, 3] {
        let pure = build_percolation(m, cap, &pi, 1.0, 0.0)?;
        let noisy = build_percolation(m, cap, &pi, 1.0, 0.5)?;
        println!("m = {m}");
        for t in [0.25, 0.5, 1.0, 1.5] {
            let p = wild_sum(&pure.sum_kernel, &pure.pi, &SeriesParams::new(1.0, t, 1e-8))?;
            let params = SeriesParams::new(1.0, t, 1e-8).with_gamma(noisy.gamma);
            let n = wild_sum_two_kernel(&noisy.sum_kernel, &noisy.regression, &noisy.pi, &params)?;
            println!(
                "  t={t:<5} mean level {:>7.3} (with regression {:>6.3}), at cap {:.2e}, terms {}",
                PercolationModel::mean_level(&p.law),
                PercolationModel::mean_level(&n.law),
                p.law.weights()[cap],
                p.terms_used.0
            );
        }
    }
    Ok(())
}
