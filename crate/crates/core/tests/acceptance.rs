//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs sequentially; each check parallelizes internally.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use isoexplain::bench::{bench_explain, linear_r_squared, BenchConfig};
use isoexplain::explain::ours_tree_contribution;
use isoexplain::heatmap::{
    mean_imbalance, render_grid_methods, Bagging, HeatmapCell, HeatmapConfig, Setting,
};
use isoexplain::rng::stream_rng;
use isoexplain::synthbench::{
    gen_clusters, run_synthetic, sweep, AnomalizationSpec, SweepAxis, SynthConfig,
};
use isoexplain::{
    explain_ours, fit_forest, split_score, Dataset, IsolationForest, IsolationTree, Method,
    TreeNode,
};

const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        ("split score endpoints", split_score_endpoints),
        ("telescoping per tree", telescoping),
        ("balanced tree annihilates", balanced_annihilation),
        ("ground truth vs baselines", ground_truth),
        ("dimensionality robustness", dimensionality),
        ("inverse-k error shape", inverse_k),
        ("timing invariance and scaling", timing),
        ("heatmap contrast", heatmap),
        ("experiment determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn split_score_endpoints() -> Outcome {
    let half = split_score(256, 128).unwrap();
    let one_off = split_score(256, 255).unwrap();
    let isolated = split_score(256, 1).unwrap();
    let pass = half == 0.0 && (one_off - (-0.9944)).abs() <= 0.005 && isolated == 7.0;
    outcome(
        pass,
        format!("(256,128)={half} (256,255)={one_off:.4} (256,1)={isolated}"),
    )
}

fn telescoping() -> Outcome {
    let mut rng = stream_rng(2024, 0);
    let mut worst = 0.0f64;
    let mut trees = 0usize;
    for f in 0..200u64 {
        let d = rng.random_range(1..=8);
        let psi = rng.random_range(2..=256);
        let n = rng.random_range(psi.min(300)..=300).max(2);
        let t = rng.random_range(1..=20);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let data = Dataset::from_rows(rows).unwrap();
        let forest = fit_forest(&data, t, psi, f).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-6.0..6.0)).collect();
            for tree in forest.trees() {
                let sum: f64 = ours_tree_contribution(tree, &x).unwrap().iter().sum();
                let p = tree.path_length(&x).unwrap();
                let expected =
                    (tree.sample_size() as f64 / p.leaf_size as f64).log2() - p.depth as f64;
                worst = worst.max((sum - expected).abs());
                trees += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max deviation {worst:.2e} over {trees} tree/probe pairs"),
    )
}

/// Perfectly balanced tree over 256 points on a line, split at midpoints.
fn balanced(lo: usize, hi: usize, depth: usize) -> TreeNode {
    if hi - lo == 1 {
        return TreeNode::leaf(1, depth);
    }
    let mid = (lo + hi) / 2;
    TreeNode::split(
        0,
        mid as f64 - 0.5,
        balanced(lo, mid, depth + 1),
        balanced(mid, hi, depth + 1),
    )
}

fn balanced_annihilation() -> Outcome {
    let tree = IsolationTree::new(balanced(0, 256, 0), 1).unwrap();
    let forest = IsolationForest::from_trees(vec![tree], 256, 0).unwrap();
    let probes = [-100.0, 0.0, 17.0, 127.5, 128.0, 255.0, 1e6];
    let nonzero: Vec<f64> = probes
        .iter()
        .map(|&x| explain_ours(&forest, &[x]).unwrap().weights[0])
        .filter(|&w| w != 0.0)
        .collect();
    outcome(
        nonzero.is_empty(),
        format!("{} probes, nonzero weights {nonzero:?}", probes.len()),
    )
}

/// Mean normalized error per (axis value, method) over `SEEDS` seeds.
fn seed_averaged(
    axis: SweepAxis,
    grid: &[f64],
    base: &SynthConfig,
) -> BTreeMap<(u64, Method), f64> {
    let mut sums: BTreeMap<(u64, Method), f64> = BTreeMap::new();
    for seed in 0..SEEDS {
        let mut config = base.clone();
        config.spec.seed = seed;
        for point in sweep(axis, grid, &config).unwrap() {
            for r in point.results {
                *sums
                    .entry((point.axis_value.to_bits(), r.method))
                    .or_default() += r.normalized_error / SEEDS as f64;
            }
        }
    }
    sums
}

fn ground_truth() -> Outcome {
    let grid = [0.25, 0.5, 1.0];
    let base = SynthConfig {
        methods: vec![Method::Ours, Method::DiffiLocal],
        ..Default::default()
    };
    let avg = seed_averaged(SweepAxis::MFraction, &grid, &base);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in grid {
        let ours = avg[&(m.to_bits(), Method::Ours)];
        let diffi = avg[&(m.to_bits(), Method::DiffiLocal)];
        pass &= ours < 1.0 && ours <= diffi + 0.05;
        parts.push(format!("m={m}: ours {ours:.3} diffi {diffi:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max - min
}

fn dimensionality() -> Outcome {
    let dims = [2.0, 10.0, 25.0, 50.0];
    let base = SynthConfig {
        methods: vec![Method::Ours, Method::DiffiLocal],
        spec: AnomalizationSpec {
            m_fraction: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let avg = seed_averaged(SweepAxis::Dims, &dims, &base);
    let series = |m: Method| {
        dims.iter()
            .map(|d| avg[&(d.to_bits(), m)])
            .collect::<Vec<_>>()
    };
    let ours = series(Method::Ours);
    let diffi = series(Method::DiffiLocal);
    let (so, sd) = (spread(&ours), spread(&diffi));
    outcome(
        so < 0.15 && sd > so,
        format!("ours {ours:.3?} spread {so:.3}; diffi {diffi:.3?} spread {sd:.3}"),
    )
}

fn inverse_k() -> Outcome {
    let d = 20;
    let ks = [1usize, 2, 4, 5, 10, 20];
    let mut errors = vec![0.0; ks.len()];
    for seed in 0..SEEDS {
        for (e, &k) in errors.iter_mut().zip(&ks) {
            let config = SynthConfig {
                d,
                methods: vec![Method::Ours],
                spec: AnomalizationSpec {
                    m_fraction: k as f64 / d as f64,
                    seed,
                    ..Default::default()
                },
                ..Default::default()
            };
            *e += run_synthetic(&config).unwrap()[0].mean_error / SEEDS as f64;
        }
    }
    // least squares for error = a + b * sqrt(1/k)
    let x: Vec<f64> = ks.iter().map(|&k| (1.0 / k as f64).sqrt()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = errors.iter().sum::<f64>() / n;
    let sxy: f64 = x
        .iter()
        .zip(&errors)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    outcome(
        b > 0.0,
        format!("k={ks:?} error {errors:.3?}; fit a={a:.3} b={b:.3}"),
    )
}

fn timing() -> Outcome {
    let data = gen_clusters(1000, 10, 2, 7).unwrap();
    let config = BenchConfig {
        repeats: 15,
        n_examples: 200,
        seed: 7,
        ..Default::default()
    };
    let forest = fit_forest(&data, 100, 256, 7).unwrap();
    let recs = bench_explain(
        &forest,
        &data,
        "synth",
        &[Method::Ours],
        &[0.1, 1.0],
        &config,
    )
    .unwrap();
    let ratio = recs[0].seconds_per_example / recs[1].seconds_per_example;

    let trees = [50usize, 100, 200, 400];
    let mut times = Vec::new();
    for &t in &trees {
        let forest = fit_forest(&data, t, 256, 7).unwrap();
        let r = bench_explain(&forest, &data, "synth", &[Method::Ours], &[0.33], &config).unwrap();
        times.push(r[0].seconds_per_example);
    }
    let x: Vec<f64> = trees.iter().map(|&t| t as f64).collect();
    let r2 = linear_r_squared(&x, &times);
    let shown: Vec<String> = times.iter().map(|t| format!("{t:.2e}")).collect();
    outcome(
        (0.8..=1.25).contains(&ratio) && r2 >= 0.95,
        format!(
            "time(m=10%)/time(m=100%) = {ratio:.3}; T={trees:?} s/example {shown:?} R2={r2:.4}"
        ),
    )
}

fn maps(setting: Setting, seed: u64) -> Vec<(Method, Vec<HeatmapCell>)> {
    let config = HeatmapConfig {
        resolution: 25,
        setting,
        seed,
        ..Default::default()
    };
    render_grid_methods(&config, &[Method::Ours, Method::DiffiLocal]).unwrap()
}

/// Rightmost column, restricted to rows within two standard deviations of
/// a cluster center on x2.
fn right_edge(cells: &[HeatmapCell]) -> f64 {
    let x_max = cells.iter().map(|c| c.x1).fold(f64::MIN, f64::max);
    let edge: Vec<f64> = cells
        .iter()
        .filter(|c| c.x1 == x_max && ((c.x2 - 5.0).abs() <= 2.0 || (c.x2 + 5.0).abs() <= 2.0))
        .map(|c| c.contribution_x1)
        .collect();
    edge.iter().sum::<f64>() / edge.len() as f64
}

fn heatmap() -> Outcome {
    let seeds = 10;
    let mut edge = [0.0; 2];
    // imbalance[method][with_anomalies][bagging]
    let mut imbalance = [[[0.0; 2]; 2]; 2];
    for seed in 0..seeds {
        for setting in Setting::ALL {
            let a = usize::from(setting.with_anomalies);
            let b = usize::from(setting.bagging == Bagging::OutOfBag);
            for (j, (_, cells)) in maps(setting, seed).iter().enumerate() {
                imbalance[j][a][b] += mean_imbalance(cells) / seeds as f64;
                if setting == Setting::new(Bagging::InBag, true) {
                    edge[j] += right_edge(cells) / seeds as f64;
                }
            }
        }
    }
    let edge_ok = edge[0] >= 0.8 && (edge[1] - 0.6).abs() <= 0.15;
    let flatter = imbalance
        .iter()
        .flatten()
        .all(|ib_oob| ib_oob[1] < ib_oob[0]);
    let fmt = |j: usize| {
        format!(
            "A ib {:.3} oob {:.3}, no-A ib {:.3} oob {:.3}",
            imbalance[j][1][0], imbalance[j][1][1], imbalance[j][0][0], imbalance[j][0][1]
        )
    };
    outcome(
        edge_ok && flatter,
        format!(
            "right edge ours {:.3} diffi {:.3}; imbalance ours [{}] diffi [{}]",
            edge[0],
            edge[1],
            fmt(0),
            fmt(1)
        ),
    )
}

fn cli(args: &[&str]) -> i32 {
    isoexplain::cli::run(std::iter::once("isoexplain").chain(args.iter().copied()))
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("clusters.csv");
    let data = gen_clusters(300, 5, 2, 11).unwrap();
    let file = std::fs::File::create(&input).unwrap();
    isoexplain::io::write_dataset_csv(&data, file).unwrap();
    let input = input.to_str().unwrap();

    let mut identical = 0;
    let mut problems = Vec::new();
    for kind in ["synth", "real", "heatmap"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{kind}-{run}"));
            let out = out.to_str().unwrap();
            let args: Vec<&str> = match kind {
                "synth" => vec![
                    "experiment",
                    "synth",
                    "--out-dir",
                    out,
                    "--seed",
                    "5",
                    "--n",
                    "400",
                    "--trees",
                    "30",
                    "--n-examples",
                    "40",
                    "--grid",
                    "0.25,1.0",
                ],
                "real" => vec![
                    "experiment",
                    "real",
                    "--out-dir",
                    out,
                    "--input",
                    input,
                    "--seed",
                    "5",
                    "--trees",
                    "30",
                    "--n-examples",
                    "40",
                    "--m-grid",
                    "0.2,0.6",
                ],
                _ => vec![
                    "experiment",
                    "heatmap",
                    "--out-dir",
                    out,
                    "--seed",
                    "5",
                    "--resolution",
                    "6",
                    "--trees",
                    "10",
                    "--psi",
                    "64",
                ],
            };
            let code = cli(&args);
            if code != 0 {
                problems.push(format!("{kind} run {run} exited {code}"));
            }
            outputs.push(csv_files(Path::new(out)));
        }
        if outputs[0].is_empty() {
            problems.push(format!("{kind} wrote no CSV"));
        } else if outputs[0] == outputs[1] {
            identical += outputs[0].len();
        } else {
            problems.push(format!("{kind} outputs differ"));
        }
    }
    outcome(
        problems.is_empty(),
        format!("{identical} CSV files byte-identical across reruns; problems {problems:?}"),
    )
}
