// Sweep the dimensionality of the synthetic data and write the per-pick and
// aggregate CSVs that the plotting scripts read.

use isoexplain::synthbench::{
    sweep, write_aggregate_csv, write_results_csv, AnomalizationSpec, SweepAxis, SynthConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = SynthConfig {
        n: 500,
        trees: 50,
        spec: AnomalizationSpec {
            m_fraction: 0.5,
            n_examples: 30,
            ..Default::default()
        },
        ..Default::default()
    };
    let points = sweep(SweepAxis::Dims, &[2.0, 6.0, 12.0], &base)?;
    for p in &points {
        for r in &p.results {
            println!(
                "d={:<3} {:>11}: {:.3}",
                p.axis_value,
                r.method.to_string(),
                r.normalized_error
            );
        }
    }

    let dir = std::env::temp_dir().join("isoexplain-sweep");
    std::fs::create_dir_all(&dir)?;
    let results = dir.join("results.csv");
    let aggregate = dir.join("aggregate.csv");
    write_results_csv(&points, std::fs::File::create(&results)?)?;
    write_aggregate_csv(&points, std::fs::File::create(&aggregate)?)?;
    println!("wrote {} and {}", results.display(), aggregate.display());
    Ok(())
}
