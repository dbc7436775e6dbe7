// Contribution map of the first attribute over a coarse 2-D grid, printed
// as text. 0 means all credit goes to x2, 1 means all credit goes to x1.

use isoexplain::heatmap::{mean_imbalance, render_grid_methods, Bagging, HeatmapConfig, Setting};
use isoexplain::Method;

fn main() -> isoexplain::Result<()> {
    let config = HeatmapConfig {
        resolution: 9,
        setting: Setting::new(Bagging::OutOfBag, true),
        trees: 50,
        ..Default::default()
    };
    for (method, cells) in render_grid_methods(&config, &[Method::Ours, Method::DiffiLocal])? {
        println!(
            "{method} ({}), mean |c - 0.5| = {:.3}",
            config.setting.tag(),
            mean_imbalance(&cells)
        );
        // grid rows run bottom to top; print the top row first
        for row in cells.chunks(config.resolution).rev() {
            let line: Vec<String> = row
                .iter()
                .map(|c| format!("{:.2}", c.contribution_x1))
                .collect();
            println!("  x2={:>6.1}  {}", row[0].x2, line.join(" "));
        }
    }
    Ok(())
}
