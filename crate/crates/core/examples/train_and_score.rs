// Train a forest on two Gaussian clusters and rank a few probes by anomaly
// score. Lower raw scores (shorter paths) mean more anomalous.

use isoexplain::fit_forest;
use isoexplain::synthbench::gen_clusters;

fn main() -> isoexplain::Result<()> {
    let data = gen_clusters(1000, 3, 2, 42)?;
    let forest = fit_forest(&data, 100, 256, 42)?;
    println!(
        "{} trees, psi={}, d={}",
        forest.n_trees(),
        forest.psi(),
        forest.d()
    );

    let probes: [(&str, [f64; 3]); 4] = [
        ("cluster center", [5.0, 5.0, 5.0]),
        ("other center", [-5.0, -5.0, -5.0]),
        ("between clusters", [0.0, 0.0, 0.0]),
        ("far away", [30.0, -30.0, 30.0]),
    ];
    for (name, x) in probes {
        println!(
            "{name:>16}: path score {:6.3}  normalized {:5.3}",
            forest.anomaly_score(&x)?,
            forest.normalized_score(&x)?
        );
    }
    Ok(())
}
