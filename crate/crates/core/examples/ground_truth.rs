// Anomalize known attributes and check how well each method recovers them.
// Errors are normalized by the random baseline, so 1.0 means "no better
// than chance" and lower is better.

use isoexplain::fit_forest;
use isoexplain::synthbench::{gen_clusters, run_ground_truth, AnomalizationSpec};
use isoexplain::Method;

fn main() -> isoexplain::Result<()> {
    let data = gen_clusters(1000, 6, 2, 1)?;
    let forest = fit_forest(&data, 100, 256, 1)?;
    for m in [0.25, 0.5, 1.0] {
        let spec = AnomalizationSpec {
            m_fraction: m,
            n_examples: 50,
            seed: 1,
            ..Default::default()
        };
        println!(
            "m = {m} (k = {} of {} attributes)",
            spec.k(data.d()),
            data.d()
        );
        for r in run_ground_truth(&data, &forest, &spec, &Method::ALL)? {
            println!(
                "  {:>11}: mean error {:.3}  normalized {:.3}  ({} picks used)",
                r.method.to_string(),
                r.mean_error,
                r.normalized_error,
                r.n_used()
            );
        }
    }
    Ok(())
}
