// Save a trained forest, load it back and confirm it scores identically.

use isoexplain::io::{load_model, save_model};
use isoexplain::synthbench::gen_clusters;
use isoexplain::{explain_ours, fit_forest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = gen_clusters(500, 4, 2, 5)?;
    let forest = fit_forest(&data, 30, 128, 5)?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("forest.model");
    save_model(&path, &forest)?;
    let size = std::fs::metadata(&path)?.len();
    let loaded = load_model(&path)?;

    let x = [8.0, -1.0, 5.0, 5.0];
    println!("model file: {size} bytes, {} trees", loaded.n_trees());
    println!(
        "score before {:.6} after {:.6}",
        forest.anomaly_score(&x)?,
        loaded.anomaly_score(&x)?
    );
    println!(
        "ours weights match: {}",
        explain_ours(&forest, &x)? == explain_ours(&loaded, &x)?
    );
    assert_eq!(loaded, forest);
    Ok(())
}
