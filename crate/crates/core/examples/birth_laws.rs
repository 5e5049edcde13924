//! Number of meetings in a history: the infinite-population law, its
//! finite-population counterparts and the geometric bound.

use wildkac::purebirth::{
    closed_form_law, geometric_law, pn_finite_n, pn_kolmogorov, redundancy_bound, truncation_index, TAIL_TOL,
};

fn main() -> wildkac::Result<()> {
    let (m, t) = (3, 1.0);
    let n_max = truncation_index(m, t, TAIL_TOL);
    let limit = closed_form_law(m, t, n_max)?;
    let integrated = pn_kolmogorov(m, t, n_max, 1e-3)?;
    let small = pn_finite_n(m, 20, t, n_max, 1e-3)?;
    let large = pn_finite_n(m, 2000, t, n_max, 1e-3)?;
    let geo = geometric_law(m, t, n_max)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12} {:>12}", "n", "limit", "integrated", "N=20", "N=2000", "geometric");
    for n in 0..=10 {
        println!(
            "{n:>3} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            limit.get(n),
            integrated.get(n),
            small.get(n),
            large.get(n),
            geo.get(n)
        );
    }
    println!("\nmean meetings: limit {:.4}, N=20 {:.4}", limit.mean(), small.mean());
    for big_n in [100, 1000, 10_000] {
        println!("expected redundant meetings, m=2, N={big_n}: {:.3e}", redundancy_bound(2, big_n, 1.0)?);
    }
    Ok(())
}
