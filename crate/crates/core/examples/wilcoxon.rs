//! Paired Wilcoxon signed-rank test, exact and normal-approximation paths.

use stainshift::metrics::{summary_stats, StdMode};
use stainshift::stats::{wilcoxon_signed_rank, Alternative, PairedSample, WilcoxonOptions};

fn main() -> stainshift::Result<()> {
    let before = vec![0.61, 0.70, 0.58, 0.66, 0.72, 0.49, 0.63, 0.69, 0.55, 0.71];
    let after = vec![0.78, 0.81, 0.74, 0.80, 0.79, 0.70, 0.77, 0.84, 0.69, 0.80];
    let sample = PairedSample::new(before.clone(), after.clone())?;

    let exact = wilcoxon_signed_rank(&sample, WilcoxonOptions::default())?;
    println!("exact:  W = {}  p = {:.6}  ({:?})", exact.statistic_w, exact.p_two_sided, exact.method);

    let approx = wilcoxon_signed_rank(&sample, WilcoxonOptions { exact_max_n: 0, ..Default::default() })?;
    println!("normal: W = {}  p = {:.6}", approx.statistic_w, approx.p_two_sided);

    let greater = WilcoxonOptions { alternative: Alternative::Greater, ..Default::default() };
    println!("one-sided (after > before): p = {:.6}", wilcoxon_signed_rank(&sample, greater)?.p_value);

    for (name, v) in [("before", &before), ("after", &after)] {
        let s = summary_stats(v, StdMode::Sample)?;
        println!("{name:<7} mean {:.3} median {:.3} iqr [{:.3}, {:.3}]", s.mean, s.median, s.p25, s.p75);
    }
    Ok(())
}
