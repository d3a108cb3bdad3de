use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topocause::datagen::DatasetKind;
use topocause::estimate::EstimatorKind;
use topocause::harness::{self, ExperimentConfig};
use topocause::inference::covariance;
use topocause::io::{self, OutcomeKind};
use topocause::metrics::{distance_report, stability_check, wasserstein};
use topocause::persistence::{compute_persistence, write_diagrams_csv};
use topocause::summary::{
    build_complex, complex_diagrams, silhouette_json, write_curve_csv, Filtration, SummaryGrid,
};
use topocause::{Error, Result};

#[derive(Parser)]
#[command(name = "topocause", version, about = "Topological causal effects from complex outcomes")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    /// Number of units.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Orbit,
    SynthImage,
    SynthGraph,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cloud,
    Image,
    Graph,
}

#[derive(Clone, Copy, ValueEnum)]
enum FiltrationArg {
    Rips,
    Alpha,
    Cubical,
    Graph,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Pi,
    Ipw,
    IpwKnownPi,
    Aipw,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum)]
    filtration: Option<FiltrationArg>,
    /// Largest simplex dimension of a Rips complex.
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    /// Rips cut-off in radius units.
    #[arg(long, default_value_t = f64::INFINITY)]
    max_radius: f64,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset directory with both potential outcomes.
    GenData(DataArgs),
    /// Persistence diagrams of one outcome file.
    Persist {
        #[command(flatten)]
        input: InputArgs,
        /// Highest homology degree.
        #[arg(long, default_value_t = 1)]
        max_degree: usize,
    },
    /// Silhouettes of one outcome file in the configured degrees.
    Silhouette {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Wasserstein distance between two diagram files.
    Distance {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Also certify silhouette stability at this power.
        #[command(flatten)]
        grid: GridArgs,
    },
    /// One estimator on a dataset directory (or a freshly generated one).
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "aipw")]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 1)]
        degree: usize,
    },
    /// Sup test of no effect in every configured degree.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Replicated experiment with summary tables and bands.
    Experiment(DataArgs),
    /// Per-stage timings on one dataset.
    Bench(DataArgs),
}

fn load_config(cli: &Cli, data: Option<&DataArgs>) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(d) = data {
        if let Some(kind) = d.dataset {
            config.dataset = match kind {
                DatasetArg::Orbit => DatasetKind::Orbit,
                DatasetArg::SynthImage => DatasetKind::SynthImage,
                DatasetArg::SynthGraph => DatasetKind::SynthGraph,
            };
        }
        if let Some(n) = d.n {
            config.n = n;
        }
    }
    config.validate()?;
    Ok(config)
}

fn apply_grid(config: &mut ExperimentConfig, g: &GridArgs) -> Result<()> {
    if let Some(r) = g.r {
        config.r = Some(r);
    }
    if g.t_min.is_some() || g.t_max.is_some() || g.n_points.is_some() {
        let base = config.grid();
        config.grid = Some(SummaryGrid {
            t_min: g.t_min.unwrap_or(base.t_min),
            t_max: g.t_max.unwrap_or(base.t_max),
            n_points: g.n_points.unwrap_or(base.n_points),
        });
    }
    config.validate()
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn json(value: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("output serialises");
    s.push('\n');
    s.into_bytes()
}

fn filtration_for(input: &InputArgs, config: &ExperimentConfig) -> Filtration {
    match input.filtration {
        Some(FiltrationArg::Rips) => Filtration::Rips {
            max_dim: input.max_dim,
            max_radius: input.max_radius,
        },
        Some(FiltrationArg::Alpha) => Filtration::Alpha,
        Some(FiltrationArg::Cubical) => Filtration::Cubical,
        Some(FiltrationArg::Graph) => Filtration::Graph,
        None => match input.kind {
            KindArg::Cloud if config.filtration.is_some() => config.filtration(),
            KindArg::Cloud => Filtration::Alpha,
            KindArg::Image => Filtration::Cubical,
            KindArg::Graph => Filtration::Graph,
        },
    }
}

fn read_input(input: &InputArgs) -> Result<topocause::summary::Outcome> {
    let kind = match input.kind {
        KindArg::Cloud => OutcomeKind::Cloud,
        KindArg::Image => OutcomeKind::Image,
        KindArg::Graph => OutcomeKind::Graph,
    };
    io::read_outcome(&input.input, kind)
}

fn dataset_for(config: &ExperimentConfig, input: Option<&Path>) -> Result<harness::Dataset> {
    match input {
        Some(dir) => {
            let data = harness::read_dataset(dir)?;
            if data.kind != config.dataset {
                return Err(Error::Config(format!(
                    "dataset in {} is {:?} but the config says {:?}",
                    dir.display(),
                    data.kind,
                    config.dataset
                )));
            }
            Ok(data)
        }
        None => harness::generate_dataset(config),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::GenData(data) => {
            let config = load_config(cli, Some(data))?;
            let dataset = harness::generate_dataset(&config)?;
            create_out(out)?;
            let files = harness::write_dataset(out, &dataset, &config)?;
            println!("wrote {} files for {} units to {}", files.len(), dataset.len(), out.display());
        }
        Command::Persist { input, max_degree } => {
            let config = load_config(cli, None)?;
            let outcome = read_input(input)?;
            let complex = build_complex(&outcome, filtration_for(input, &config))?;
            let diagrams = compute_persistence(&complex, *max_degree)?;
            create_out(out)?;
            write_diagrams_csv(create(&out.join("diagrams.csv"))?, &diagrams)?;
            for d in &diagrams {
                let immortal = d.points.iter().filter(|p| !p.is_finite()).count();
                println!("H{}: {} points ({} immortal)", d.dim, d.len(), immortal);
            }
        }
        Command::Silhouette { input, grid } => {
            let mut config = load_config(cli, None)?;
            apply_grid(&mut config, grid)?;
            let mut pipe = config.pipeline();
            pipe.filtration = filtration_for(input, &config);
            let outcome = read_input(input)?;
            let complex = build_complex(&outcome, pipe.filtration)?;
            let diagrams = complex_diagrams(&complex, &pipe, config.seed)?;
            create_out(out)?;
            for (d, diag) in pipe.degrees.iter().zip(&diagrams) {
                let curve = topocause::summary::silhouette(diag, pipe.r, &pipe.grid)?;
                write_curve_csv(create(&out.join(format!("silhouette_h{d}.csv")))?, &pipe.grid, &curve.values)?;
                write(&out.join(format!("silhouette_h{d}.json")), &json(&silhouette_json(&curve, *d)))?;
                println!("H{d}: {} points, empty = {}", diag.len(), curve.empty_diagram);
            }
        }
        Command::Distance { left, right, degree, q, grid } => {
            let pick = |path: &Path| -> Result<topocause::persistence::PersistenceDiagram> {
                let all = io::read_diagrams_csv(path)?;
                Ok(all
                    .into_iter()
                    .nth(*degree)
                    .unwrap_or_else(|| topocause::persistence::PersistenceDiagram::empty(*degree)))
            };
            let (d1, d2) = (pick(left)?, pick(right)?);
            let (distance, matching) = wasserstein(&d1, &d2, *q)?;
            let certificate = match grid.r {
                Some(r) => {
                    let g = SummaryGrid::new(
                        grid.t_min.unwrap_or(0.0),
                        grid.t_max.ok_or_else(|| Error::Config("--r needs --t-max".into()))?,
                        grid.n_points.unwrap_or(201),
                    )
                    .map_err(|e| Error::Config(e.to_string()))?;
                    Some(stability_check(&d1, &d2, r, &g)?)
                }
                None => None,
            };
            create_out(out)?;
            let report = distance_report(*q, distance, &matching, certificate.as_ref());
            write(&out.join("distance.json"), &json(&report))?;
            println!("W{q} = {distance}");
            if let Some(c) = certificate {
                println!("sup |phi - phi'| = {} <= {} : {}", c.sup_diff, c.bound, c.satisfied);
            }
        }
        Command::Estimate { data, input, estimator, degree } => {
            let config = load_config(cli, Some(data))?;
            let kind = match estimator {
                EstimatorArg::Pi => EstimatorKind::Pi,
                EstimatorArg::Ipw => EstimatorKind::Ipw,
                EstimatorArg::IpwKnownPi => EstimatorKind::IpwKnownPi,
                EstimatorArg::Aipw => EstimatorKind::Aipw,
            };
            if !config.degrees.contains(degree) {
                return Err(Error::Config(format!("degree {degree} is not among the configured degrees")));
            }
            let dataset = dataset_for(&config, input.as_deref())?;
            let (pool, samples) = harness::dataset_samples(&config, &dataset)?;
            let est = harness::estimate_on_samples(&config, &samples, kind, *degree, harness::replicate_seed(dataset.seed, 0))?;
            let se = est.if_matrix.as_ref().map(|_| covariance(&est)).transpose()?.map(|c| c.se);
            let truth = pool.truth(*degree);
            let l1 = topocause::estimate::l1_distance(&est.curve, &truth, &est.grid)?;
            create_out(out)?;
            let stem = format!("estimate_{}_h{degree}", kind.name().to_lowercase());
            let record = serde_json::json!({
                "estimator": kind,
                "degree": degree,
                "grid": est.grid,
                "curve": est.curve,
                "se": se,
                "metadata": {
                    "n": est.n,
                    "nuisance": est.metadata,
                    "truth_l1": l1,
                    "seed": dataset.seed,
                },
            });
            write(&out.join(format!("{stem}.json")), &json(&record))?;
            write_curve_csv(create(&out.join(format!("{stem}.csv")))?, &est.grid, &est.curve)?;
            println!("{} H{degree}: L1 to the sample truth = {l1:e}", kind.name());
        }
        Command::Test { data, input } => {
            let config = load_config(cli, Some(data))?;
            let dataset = dataset_for(&config, input.as_deref())?;
            let reports = harness::dataset_tests(&config, &dataset)?;
            create_out(out)?;
            write(&out.join("test.json"), &json(&reports))?;
            for r in &reports {
                println!(
                    "H{}: T_n = {:.4}, critical value = {:.4}, reject = {}",
                    r.degree, r.t_n, r.critical_value, r.reject
                );
            }
        }
        Command::Experiment(data) => {
            let config = load_config(cli, Some(data))?;
            let report = harness::run_experiment(&config)?;
            let files = harness::emit_report(&report, out)?;
            for s in &report.summaries {
                println!("H{} {:<12} L1 = {:.4e}  std = {:.4e}", s.degree, s.estimator.name(), s.l1, s.std);
            }
            for t in &report.tests {
                println!("test H{}: T_n = {:.4}, c = {:.4}, reject = {}", t.degree, t.t_n, t.critical_value, t.reject);
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Bench(data) => {
            let config = load_config(cli, Some(data))?;
            let bench = harness::benchmark_runtime(&config)?;
            create_out(out)?;
            write(&out.join("bench.json"), &json(&bench))?;
            for (stage, secs) in &bench.stages {
                println!("{stage:<12} {secs:>9.3} s");
            }
            println!("{:<12} {:>9.3} s", "total", bench.total);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
