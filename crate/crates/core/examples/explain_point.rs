// Explain one anomalous point with every method. The point is typical on
// all attributes except attribute 2, which is pushed far out of range.

use isoexplain::rng::stream_rng;
use isoexplain::synthbench::gen_clusters;
use isoexplain::{explain, fit_forest, normalize_explanation, Method};

fn main() -> isoexplain::Result<()> {
    let data = gen_clusters(1000, 5, 2, 7)?;
    let forest = fit_forest(&data, 100, 256, 7)?;
    let mut x = data.row(0).to_vec();
    x[2] = 3.0 * data.column_max()[2];

    let mut rng = stream_rng(7, 0);
    for method in Method::ALL {
        let w = normalize_explanation(&explain(method, &forest, &x, &mut rng)?)?;
        let shown: Vec<String> = w.weights.iter().map(|v| format!("{v:+.3}")).collect();
        println!(
            "{method:>11}: [{}]  top attribute {:?}",
            shown.join(", "),
            w.argmax()
        );
    }
    Ok(())
}
