use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wsnloc::experiment::{initial_point, run_experiment, write_outputs, ExperimentConfig};
use wsnloc::instance_io::{read_instance_file, write_instance_file};
use wsnloc::metrics::{crlb_root, message_accounting, rmse, MethodKind};
use wsnloc::netgen::{generate_connected, sample_noise, GenSpec};
use wsnloc::solver::{criticality, objective_orig, AmSolver, SolverConfig};
use wsnloc::{Clustering, ProblemMatrices};

#[derive(Parser)]
#[command(name = "wsnloc", version, about = "Range-based sensor network localization by alternating minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random connected network and write it as an instance file.
    Generate(GenerateArgs),
    /// Localize the sensors of an instance with one method.
    Solve(SolveArgs),
    /// Run a method × realization experiment from a config file.
    Experiment(ExperimentArgs),
    /// Compute a clustering and write the instance with a [clusters] section.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Named parameter set (overrides nothing given explicitly below).
    #[arg(long)]
    preset: Option<String>,
    /// Total node count, anchors included.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Anchor count.
    #[arg(long)]
    m: Option<usize>,
    /// Communication radius.
    #[arg(long)]
    r: Option<f64>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a noisy realization with this index instead of true distances.
    #[arg(long)]
    realization: Option<usize>,
    #[arg(long, default_value_t = 100)]
    attempts: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// am-fc, am-fd, am-cc or am-u-q<q>.
    #[arg(long, default_value = "am-fc")]
    method: String,
    /// Use the instance's [clusters] section instead of the method's clustering.
    #[arg(long)]
    use_file_clusters: bool,
    #[arg(long, default_value_t = 0)]
    ag_iters: usize,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Stop early once a sweep moves the estimate by at most this much.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed of the initial point and of geographical cluster heads.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    x0_half_width: f64,
    #[arg(long)]
    sequential: bool,
    /// Write the estimated positions as CSV.
    #[arg(long)]
    positions: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed for topology, noise, initial points and cluster heads.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    x0_half_width: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Write n/a in the timing columns.
    #[arg(long)]
    no_timing: bool,
    /// Skip the per-iteration curves.
    #[arg(long)]
    no_curves: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Whole,
    Singleton,
    Geographical,
    Colored,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Cluster count for geographical clustering.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Cluster(a) => cluster(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut spec = match &a.preset {
        Some(name) => GenSpec::preset(name).with_context(|| format!("unknown preset '{name}'"))?,
        None => match (a.k, a.m, a.r, a.sigma) {
            (Some(k), Some(m), Some(r), Some(s)) => GenSpec::new(k, m, r, s),
            _ => bail!("give --preset or all of --K, --m, --r, --sigma"),
        },
    };
    if let Some(k) = a.k {
        spec.k = k;
    }
    if let Some(m) = a.m {
        spec.m = m;
    }
    if let Some(r) = a.r {
        spec.r = r;
    }
    if let Some(s) = a.sigma {
        spec.sigma = s;
    }
    let spec = spec.with_seed(a.seed);
    let (net, attempt) = generate_connected(&spec, a.attempts)?;
    let net = match a.realization {
        Some(l) => sample_noise(&net, spec.sigma, a.seed, l)?.net,
        None => net,
    };
    write_instance_file(&net, spec.sigma, None, &a.output)?;
    println!(
        "wrote {} (N={} m={} edges={} mean degree {:.2}, attempt {attempt})",
        a.output.display(),
        net.n_sensors(),
        net.n_anchors(),
        net.n_edges(),
        net.mean_degree()
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let file = read_instance_file(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let net = &file.network;
    let kind: MethodKind = a.method.parse()?;
    let clustering = if a.use_file_clusters {
        file.clustering.clone().context("instance has no [clusters] section")?
    } else {
        match kind {
            MethodKind::FullyCentralized => Clustering::whole(net.n_sensors()),
            MethodKind::FullyDistributed => Clustering::singleton(net.n_sensors()),
            MethodKind::Colored => Clustering::colored(net),
            MethodKind::Clustered(q) => Clustering::geographical(net, q, a.seed)?,
        }
    };
    let mats = ProblemMatrices::build(net)?;
    let solver = AmSolver::with_matrices(net, &mats, &clustering)?;
    let x0 = initial_point(a.seed, 0, net.n_sensors() * net.dim(), a.x0_half_width);
    let u0 = vec![0.0; net.n_edges() * net.dim()];
    let cfg = SolverConfig {
        max_iters: a.iterations,
        ag_iters: a.ag_iters,
        tolerance: a.tolerance,
        record_history: false,
        parallel: !a.sequential,
    };
    let start = Instant::now();
    let (state, trace) = solver.run(net, &mats, &x0, &u0, &cfg)?;
    let elapsed = start.elapsed();
    let crit = criticality(net, &state.x, &state.u);
    let ledger = message_accounting(kind, Some(&clustering), net)?;

    println!("method {}", a.method);
    println!("clusters {} ({})", clustering.len(), clustering.kind().name());
    println!("iterations {} (warm start {}, sweeps {})", state.iter, trace.ag_iterations, trace.sweeps);
    println!("converged {}", trace.converged);
    println!("obv {:.9e}", objective_orig(net, &state.x));
    if net.truth().is_some() {
        println!("rmse {:.9e}", rmse(&[state.x.clone()], net.truth())?);
        if file.sigma > 0.0 {
            match crlb_root(net, file.sigma) {
                Ok(c) => println!("crlb_root {c:.9e}"),
                Err(_) => println!("crlb_root n/a"),
            }
        }
    }
    println!("res_x {:.3e}", crit.res_x);
    println!("res_u {:.3e}", crit.res_u);
    println!("msgs_in_per_iter {}", ledger.in_total());
    println!("msgs_out_per_iter {}", ledger.out_total());
    println!("time_s {:.3}", elapsed.as_secs_f64());

    if let Some(path) = a.positions {
        let mut w = csv::Writer::from_path(&path)?;
        let n = net.dim();
        let mut header = vec!["sensor".to_string()];
        header.extend((0..n).map(|c| format!("x{c}")));
        w.write_record(&header)?;
        for i in 0..net.n_sensors() {
            let mut row = vec![(i + 1).to_string()];
            row.extend(state.x[i * n..(i + 1) * n].iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    // the command-line seed is authoritative; a seed in the file is optional
    let mut value: toml::Table = text.parse().context("config is not valid TOML")?;
    value.insert("seed".into(), toml::Value::Integer(i64::try_from(a.seed).context("seed too large")?));
    let mut cfg = ExperimentConfig::from_toml_str(&toml::to_string(&value)?)?;
    if let Some(r) = a.realizations {
        cfg.realizations = r;
    }
    if let Some(it) = a.iterations {
        cfg.iterations = it;
    }
    if let Some(h) = a.x0_half_width {
        cfg.x0_half_width = h;
    }
    if let Some(dir) = a.output_dir {
        cfg.output_dir = dir;
    }
    cfg.timing &= !a.no_timing;
    cfg.curves &= !a.no_curves;
    cfg.parallel &= !a.sequential;
    cfg.validate()?;

    let report = run_experiment(&cfg)?;
    let files = write_outputs(&report, &cfg.output_dir)?;
    for r in &report.reports {
        println!("{:<16} rmse {:.4e}  obv {:.4e}  bias {:.4e}", r.method, r.rmse, r.obv_mean, r.bias_norm);
    }
    match report.crlb_root {
        Some(c) => println!("sqrt(CRLB) {c:.4e}"),
        None => println!("sqrt(CRLB) n/a"),
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let file = read_instance_file(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let net = &file.network;
    let clustering = match a.kind {
        KindArg::Whole => Clustering::whole(net.n_sensors()),
        KindArg::Singleton => Clustering::singleton(net.n_sensors()),
        KindArg::Colored => Clustering::colored(net),
        KindArg::Geographical => Clustering::geographical(net, a.q.context("--q is required for geographical clustering")?, a.seed)?,
    };
    write_instance_file(net, file.sigma, Some(&clustering), &a.output)?;
    println!("wrote {} ({} clusters, {})", a.output.display(), clustering.len(), clustering.kind().name());
    Ok(())
}
