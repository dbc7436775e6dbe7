// Per-example explanation latency across forest sizes and anomalized
// fractions. Absolute numbers depend on the machine; the trend with the
// number of trees is what matters.

use isoexplain::bench::{bench_explain, linear_r_squared, BenchConfig};
use isoexplain::synthbench::gen_clusters;
use isoexplain::{fit_forest, Method};

fn main() -> isoexplain::Result<()> {
    let data = gen_clusters(1000, 10, 2, 3)?;
    let config = BenchConfig {
        repeats: 5,
        n_examples: 50,
        ..Default::default()
    };
    let trees = [25usize, 50, 100];
    let mut ours = Vec::new();
    for &t in &trees {
        let forest = fit_forest(&data, t, 256, 3)?;
        for r in bench_explain(
            &forest,
            &data,
            "synth",
            &[Method::Ours, Method::DiffiLocal],
            &[0.1, 1.0],
            &config,
        )? {
            println!(
                "T={t:<4} m={:<4} {:>11}: {:.2e} s/example",
                r.m_fraction,
                r.method.to_string(),
                r.seconds_per_example
            );
            if r.method == Method::Ours && r.m_fraction == 1.0 {
                ours.push(r.seconds_per_example);
            }
        }
    }
    let x: Vec<f64> = trees.iter().map(|&t| t as f64).collect();
    println!(
        "linear fit of ours vs T: R^2 = {:.3}",
        linear_r_squared(&x, &ours)
    );
    Ok(())
}
