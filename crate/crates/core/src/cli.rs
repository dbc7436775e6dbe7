//! Command-line surface of the `isoexplain` binary.
//!
//! Every numeric parameter can come from a flat TOML file (`--config`);
//! flags given on the command line win over the file, which wins over the
//! built-in defaults.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::bench::{bench_explain, write_timing_csv, BenchConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{explain, normalize_explanation, Method};
use crate::forest::fit_forest;
use crate::heatmap::{render_grid_methods, write_heatmap_csv, HeatmapConfig, Setting};
use crate::io::{check_known_shape, fmt_f64, load_csv, load_model, save_model, write_atomic};
use crate::rng::stream_rng;
use crate::synthbench::{
    gen_clusters, sweep, sweep_m_fraction, write_aggregate_csv, write_results_csv,
    AnomalizationSpec, SweepAxis, SweepPoint, SynthConfig,
};

/// Run parameters, loadable from a flat key-value file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trees: usize,
    pub psi: usize,
    pub seed: u64,
    pub m_fraction: f64,
    pub n_examples: usize,
    pub multiplier: f64,
    pub methods: Vec<String>,
    pub axis: String,
    pub grid: Vec<f64>,
    pub m_grid: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub clusters: usize,
    pub resolution: usize,
    pub settings: Vec<String>,
    pub repeats: usize,
    pub trees_grid: Vec<usize>,
    pub signed_difference: bool,
    pub label_column: Option<String>,
    pub dataset_id: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            psi: 256,
            seed: 0,
            m_fraction: 0.33,
            n_examples: 100,
            multiplier: 3.0,
            methods: Method::ALL.iter().map(|m| m.tag().to_string()).collect(),
            axis: "m_fraction".into(),
            grid: vec![0.25, 0.5, 0.75, 1.0],
            m_grid: vec![0.1, 0.25, 0.5, 0.75, 1.0],
            n: 1000,
            d: 6,
            clusters: 2,
            resolution: 50,
            settings: Setting::ALL.iter().map(|s| s.tag().to_string()).collect(),
            repeats: 7,
            trees_grid: Vec::new(),
            signed_difference: false,
            label_column: None,
            dataset_id: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn methods(&self) -> Result<Vec<Method>> {
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        if methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        Ok(methods)
    }

    fn spec(&self) -> AnomalizationSpec {
        AnomalizationSpec {
            m_fraction: self.m_fraction,
            n_examples: self.n_examples,
            multiplier: self.multiplier,
            seed: self.seed,
            signed_difference: self.signed_difference,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "isoexplain",
    version,
    about = "Isolation Forest training and explanation harness"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Flat TOML file with run parameters; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct ForestArgs {
    /// Number of trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Subsample size per tree.
    #[arg(long)]
    psi: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct ProtocolArgs {
    #[arg(long)]
    n_examples: Option<usize>,
    #[arg(long)]
    multiplier: Option<f64>,
    /// Comma-separated subset of ours, diffi_local, random.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Score the signed difference w0 - w_new instead of its magnitude.
    #[arg(long)]
    signed_difference: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a forest on a CSV file and save the model.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Column to drop before training (e.g. a label).
        #[arg(long)]
        label_column: Option<String>,
        #[command(flatten)]
        forest: ForestArgs,
    },
    /// Write anomaly scores for every row of a CSV file.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        label_column: Option<String>,
    },
    /// Write one explanation vector per row of a CSV file.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "ours")]
        method: String,
        /// Divide each vector by its L1 norm.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        label_column: Option<String>,
    },
    /// Run an evaluation experiment.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Time per-example explanation.
    Bench {
        #[arg(long)]
        output: PathBuf,
        /// Dataset to time on; synthetic clusters when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        dataset_id: Option<String>,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long, value_delimiter = ',')]
        m_grid: Option<Vec<f64>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        trees_grid: Option<Vec<usize>>,
        #[arg(long)]
        n_examples: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[command(flatten)]
        forest: ForestArgs,
    },
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// Ground-truth protocol on generated Gaussian clusters.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// One of size, dims, m_fraction.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        m_fraction: Option<f64>,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Ground-truth protocol on a user-supplied dataset over a grid of m.
    Real {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Known dataset id whose shape is checked (glass, cardio, ...).
        #[arg(long)]
        dataset_id: Option<String>,
        /// Label column; rows with a nonzero label are dropped.
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long, value_delimiter = ',')]
        m_grid: Option<Vec<f64>>,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Contribution maps on the 2-D two-cluster layout.
    Heatmap {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        resolution: Option<usize>,
        /// Comma-separated subset of ib_a, oob_a, ib_no_a, oob_no_a.
        #[arg(long, value_delimiter = ',')]
        settings: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[command(flatten)]
        forest: ForestArgs,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);

    match &cli.command {
        Command::Train {
            input,
            output,
            label_column,
            forest,
        } => {
            apply_forest(&mut cfg, forest);
            set(&mut cfg.label_column, label_column.clone().map(Some));
            let (data, _) = load_features(input, cfg.label_column.as_deref())?;
            let f = fit_forest(&data, cfg.trees, cfg.psi, cfg.seed)?;
            save_model(output, &f)?;
            eprintln!(
                "trained {} trees (psi={}) on {}x{} data",
                f.n_trees(),
                f.psi(),
                data.n(),
                data.d()
            );
        }
        Command::Score {
            model,
            input,
            output,
            label_column,
        } => {
            let forest = load_model(model)?;
            let (data, _) = load_features(
                input,
                label_column.as_deref().or(cfg.label_column.as_deref()),
            )?;
            let mut rows = Vec::with_capacity(data.n());
            for x in data.rows() {
                rows.push((forest.anomaly_score(x)?, forest.normalized_score(x)?));
            }
            write_atomic(output, |w| {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(["example_id", "anomaly_score", "normalized_score"])?;
                for (i, (a, s)) in rows.iter().enumerate() {
                    out.write_record([i.to_string(), fmt_f64(*a), fmt_f64(*s)])?;
                }
                out.flush().map_err(|e| Error::io(output, e))
            })?;
        }
        Command::Explain {
            model,
            input,
            output,
            method,
            normalize,
            label_column,
        } => {
            let forest = load_model(model)?;
            let method: Method = method.parse()?;
            let (data, _) = load_features(
                input,
                label_column.as_deref().or(cfg.label_column.as_deref()),
            )?;
            let mut header = vec!["example_id".to_string(), "method".to_string()];
            header.extend(data.column_names().iter().map(|c| format!("w_{c}")));
            header.push("anomaly_score".into());
            let mut rows = Vec::with_capacity(data.n());
            for (i, x) in data.rows().enumerate() {
                let mut rng = stream_rng(cfg.seed, i as u64);
                let mut w = explain(method, &forest, x, &mut rng)?;
                if *normalize {
                    w = normalize_explanation(&w).unwrap_or(w);
                }
                let mut row = vec![i.to_string(), method.to_string()];
                row.extend(w.weights.iter().map(|&v| fmt_f64(v)));
                row.push(fmt_f64(forest.anomaly_score(x)?));
                rows.push(row);
            }
            write_atomic(output, |w| {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(&header)?;
                for row in &rows {
                    out.write_record(row)?;
                }
                out.flush().map_err(|e| Error::io(output, e))
            })?;
        }
        Command::Experiment(exp) => run_experiment(exp, cfg)?,
        Command::Bench {
            output,
            input,
            dataset_id,
            label_column,
            m_grid,
            repeats,
            trees_grid,
            n_examples,
            methods,
            forest,
        } => {
            apply_forest(&mut cfg, forest);
            set(&mut cfg.m_grid, m_grid.clone());
            set(&mut cfg.repeats, *repeats);
            set(&mut cfg.trees_grid, trees_grid.clone());
            set(&mut cfg.n_examples, *n_examples);
            set(&mut cfg.methods, methods.clone());
            set(&mut cfg.dataset_id, dataset_id.clone().map(Some));
            set(&mut cfg.label_column, label_column.clone().map(Some));
            let (data, id) = match input {
                Some(path) => {
                    let (data, _) = load_features(path, cfg.label_column.as_deref())?;
                    let id = cfg.dataset_id.clone().unwrap_or_else(|| stem(path));
                    warn_shape(&id, &data);
                    (data, id)
                }
                None => (
                    gen_clusters(cfg.n, cfg.d, cfg.clusters, cfg.seed)?,
                    cfg.dataset_id.clone().unwrap_or_else(|| "synthetic".into()),
                ),
            };
            let trees_grid = if cfg.trees_grid.is_empty() {
                vec![cfg.trees]
            } else {
                cfg.trees_grid.clone()
            };
            let methods = cfg.methods()?;
            let bench = BenchConfig {
                repeats: cfg.repeats,
                n_examples: cfg.n_examples,
                multiplier: cfg.multiplier,
                seed: cfg.seed,
            };
            let mut records = Vec::new();
            for &t in &trees_grid {
                let start = Instant::now();
                let f = fit_forest(&data, t, cfg.psi, cfg.seed)?;
                eprintln!("training T={t}: {:.6} s", start.elapsed().as_secs_f64());
                records.extend(bench_explain(
                    &f,
                    &data,
                    &id,
                    &methods,
                    &cfg.m_grid,
                    &bench,
                )?);
            }
            write_atomic(output, |w| write_timing_csv(&records, w))?;
        }
    }
    Ok(())
}

fn apply_forest(cfg: &mut RunConfig, args: &ForestArgs) {
    set(&mut cfg.trees, args.trees);
    set(&mut cfg.psi, args.psi);
}

fn apply_protocol(cfg: &mut RunConfig, args: &ProtocolArgs) {
    set(&mut cfg.n_examples, args.n_examples);
    set(&mut cfg.multiplier, args.multiplier);
    set(&mut cfg.methods, args.methods.clone());
    cfg.signed_difference |= args.signed_difference;
}

fn run_experiment(exp: &Experiment, mut cfg: RunConfig) -> Result<()> {
    match exp {
        Experiment::Synth {
            out_dir,
            axis,
            grid,
            n,
            d,
            clusters,
            m_fraction,
            forest,
            protocol,
        } => {
            apply_forest(&mut cfg, forest);
            apply_protocol(&mut cfg, protocol);
            set(&mut cfg.axis, axis.clone());
            set(&mut cfg.grid, grid.clone());
            set(&mut cfg.n, *n);
            set(&mut cfg.d, *d);
            set(&mut cfg.clusters, *clusters);
            set(&mut cfg.m_fraction, *m_fraction);
            let axis: SweepAxis = cfg.axis.parse()?;
            let base = SynthConfig {
                n: cfg.n,
                d: cfg.d,
                n_clusters: cfg.clusters,
                trees: cfg.trees,
                psi: cfg.psi,
                spec: cfg.spec(),
                methods: cfg.methods()?,
            };
            let points = sweep(axis, &cfg.grid, &base)?;
            write_tables(out_dir, &points)
        }
        Experiment::Real {
            input,
            out_dir,
            dataset_id,
            label_column,
            m_grid,
            forest,
            protocol,
        } => {
            apply_forest(&mut cfg, forest);
            apply_protocol(&mut cfg, protocol);
            set(&mut cfg.m_grid, m_grid.clone());
            set(&mut cfg.dataset_id, dataset_id.clone().map(Some));
            set(&mut cfg.label_column, label_column.clone().map(Some));
            let (data, labels) = load_features(input, cfg.label_column.as_deref())?;
            let data = match labels {
                Some(labels) => data.filter_rows(|i| labels[i] == 0.0)?,
                None => data,
            };
            if let Some(id) = &cfg.dataset_id {
                warn_shape(id, &data);
            }
            let f = fit_forest(&data, cfg.trees, cfg.psi, cfg.seed)?;
            let points = sweep_m_fraction(&data, &f, &cfg.m_grid, &cfg.spec(), &cfg.methods()?)?;
            write_tables(out_dir, &points)
        }
        Experiment::Heatmap {
            out_dir,
            resolution,
            settings,
            methods,
            forest,
        } => {
            apply_forest(&mut cfg, forest);
            set(&mut cfg.resolution, *resolution);
            set(&mut cfg.settings, settings.clone());
            set(&mut cfg.methods, methods.clone());
            let methods: Vec<Method> = cfg
                .methods()?
                .into_iter()
                .filter(|m| *m != Method::Random)
                .collect();
            let settings = cfg
                .settings
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Setting>>>()?;
            let mut maps = Vec::new();
            for setting in settings {
                let config = HeatmapConfig {
                    resolution: cfg.resolution,
                    setting,
                    trees: cfg.trees,
                    psi: cfg.psi,
                    seed: cfg.seed,
                    ..Default::default()
                };
                for (m, cells) in render_grid_methods(&config, &methods)? {
                    maps.push((m, setting, cells));
                }
            }
            ensure_dir(out_dir)?;
            write_atomic(out_dir.join("heatmap.csv"), |w| write_heatmap_csv(&maps, w))
        }
    }
}

fn write_tables(out_dir: &Path, points: &[SweepPoint]) -> Result<()> {
    ensure_dir(out_dir)?;
    write_atomic(out_dir.join("results.csv"), |w| {
        write_results_csv(points, w)
    })?;
    write_atomic(out_dir.join("aggregate.csv"), |w| {
        write_aggregate_csv(points, w)
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads a CSV and, if `label_column` is set, splits that column off.
fn load_features(path: &Path, label_column: Option<&str>) -> Result<(Dataset, Option<Vec<f64>>)> {
    let data = load_csv(path)?;
    match label_column {
        None => Ok((data, None)),
        Some(name) => {
            let j = data
                .column_names()
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Config(format!("no column named '{name}'")))?;
            let (data, labels) = data.split_off_column(j)?;
            Ok((data, Some(labels)))
        }
    }
}

fn warn_shape(id: &str, data: &Dataset) {
    if let Some(msg) = check_known_shape(id, data) {
        log::warn!("{msg}");
        eprintln!("warning: {msg}");
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_arguments_is_a_usage_error() {
        assert_eq!(run(["isoexplain"]), 2);
        assert_eq!(run(["isoexplain", "frobnicate"]), 2);
        assert_eq!(run(["isoexplain", "train", "--bogus"]), 2);
    }

    #[test]
    fn config_file_keys() {
        let cfg: RunConfig =
            toml::from_str("trees = 50\npsi = 64\nmethods = [\"ours\"]\n").unwrap();
        assert_eq!((cfg.trees, cfg.psi), (50, 64));
        assert_eq!(cfg.methods().unwrap(), vec![Method::Ours]);
        assert_eq!(cfg.n_examples, 100);
        assert!(toml::from_str::<RunConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn defaults_match_the_standard_forest() {
        let cfg = RunConfig::default();
        assert_eq!((cfg.trees, cfg.psi), (100, 256));
    }
}
