//! Seeded method × realization experiments and their CSV outputs.
//!
//! All randomness is drawn from streams keyed by the master seed, so a
//! configuration reproduces the same files regardless of thread count.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::error::{invalid, Error, Result};
use crate::instance_io::read_instance_file;
use crate::matrices::ProblemMatrices;
use crate::metrics::{bias_estimate, crlb_root, mean_std, message_accounting, rmse, MessageLedger, MethodKind, RunReport};
use crate::netgen::{generate_connected, sample_noise, GenSpec};
use crate::network::Network;
use crate::rng::{tag, Stream};
use crate::solver::{objective_orig, AmSolver, SolverConfig};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Header of the aggregate results file.
pub const AGGREGATE_HEADER: [&str; 16] = [
    "method", "K", "m", "r", "sigma", "R", "iters", "obv_mean", "obv_std", "rmse", "bias_norm", "crlb_root", "time_seq_s",
    "time_par_s", "msgs_in_total", "msgs_out_total",
];

/// Header of the per-iteration curve file.
pub const CURVE_HEADER: [&str; 4] = ["method", "iteration", "rmse", "obv"];

/// Label of the reference row holding `sqrt(CRLB)` in the curve file.
pub const CRLB_SERIES: &str = "sqrt_crlb";

/// Generator attempts tried before giving up on a disconnected draw.
const CONNECT_ATTEMPTS: usize = 100;

fn default_realizations() -> usize {
    50
}
fn default_iterations() -> usize {
    1000
}
fn default_half_width() -> f64 {
    0.01
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_true() -> bool {
    true
}

/// Where the network comes from; exactly one source must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// Named parameter set, see [`GenSpec::preset`].
    pub preset: Option<String>,
    /// Instance file. When it carries true positions and a positive sigma,
    /// each realization redraws the noise; otherwise its distances are used
    /// as measured.
    pub path: Option<PathBuf>,
    /// Explicit generator parameters.
    pub spec: Option<GenSpec>,
    /// Overrides the noise level of the source.
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    /// `am-fc`, `am-fd`, `am-cc` or `am-u-q<q>`.
    pub variant: String,
    /// Warm-start iterations, counted inside the iteration budget.
    #[serde(default)]
    pub ag_iters: usize,
}

impl MethodConfig {
    pub fn new(variant: &str, ag_iters: usize) -> Self {
        Self { variant: variant.to_string(), ag_iters }
    }

    pub fn kind(&self) -> Result<MethodKind> {
        self.variant.parse()
    }

    /// Row label, e.g. `am-cc-ag100`.
    pub fn label(&self) -> Result<String> {
        let base = self.kind()?.name();
        Ok(if self.ag_iters > 0 { format!("{base}-ag{}", self.ag_iters) } else { base })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Location-update rounds per method, warm start included.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Initial sensor coordinates are uniform in `[-h, h]`.
    #[serde(default = "default_half_width")]
    pub x0_half_width: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Report wall-clock columns; when off they read `n/a` so outputs are
    /// byte-for-byte reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Run realizations and solver internals on the rayon pool.
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Record per-iteration RMSE and objective curves.
    #[serde(default = "default_true")]
    pub curves: bool,
    pub instance: InstanceConfig,
    #[serde(rename = "method")]
    pub methods: Vec<MethodConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("config: at least one [[method]] is required"));
        }
        if self.realizations == 0 {
            return Err(invalid("config: realizations must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(invalid("config: iterations must be at least 1"));
        }
        if !(self.x0_half_width >= 0.0) {
            return Err(invalid("config: x0_half_width must be non-negative"));
        }
        for m in &self.methods {
            m.kind()?;
            if m.ag_iters > self.iterations {
                return Err(invalid(format!("config: {} warm start exceeds the iteration budget", m.variant)));
            }
        }
        let sources = [self.instance.preset.is_some(), self.instance.path.is_some(), self.instance.spec.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(invalid("config: [instance] needs exactly one of preset, path, spec"));
        }
        if let Some(name) = &self.instance.preset {
            GenSpec::preset(name).ok_or_else(|| invalid(format!("config: unknown preset '{name}'")))?;
        }
        if let Some(s) = self.instance.sigma {
            if !(s >= 0.0) {
                return Err(invalid("config: sigma must be non-negative"));
            }
        }
        Ok(())
    }
}

/// The network an experiment runs on.
#[derive(Clone, Debug)]
pub struct LoadedInstance {
    /// Topology with true distances when truth is known.
    pub net: Network,
    pub sigma: f64,
    /// Redraw noise per realization (otherwise use `net`'s distances).
    pub resample: bool,
    /// Generator attempt that gave a connected network, if generated.
    pub topology_attempt: Option<u64>,
}

pub fn load_instance(cfg: &InstanceConfig, seed: u64) -> Result<LoadedInstance> {
    let generated = |spec: GenSpec| -> Result<LoadedInstance> {
        let mut spec = spec.with_seed(seed);
        if let Some(s) = cfg.sigma {
            spec.sigma = s;
        }
        let (net, used) = generate_connected(&spec, CONNECT_ATTEMPTS)?;
        Ok(LoadedInstance { net, sigma: spec.sigma, resample: true, topology_attempt: Some(used) })
    };
    if let Some(name) = &cfg.preset {
        let spec = GenSpec::preset(name).ok_or_else(|| invalid(format!("unknown preset '{name}'")))?;
        return generated(spec);
    }
    if let Some(spec) = &cfg.spec {
        return generated(spec.clone());
    }
    let path = cfg.path.as_ref().ok_or_else(|| invalid("instance source missing"))?;
    let file = read_instance_file(path)?;
    let sigma = cfg.sigma.unwrap_or(file.sigma);
    let resample = file.network.truth().is_some() && sigma > 0.0;
    let net = if resample { file.network.with_distances(&file.network.true_distances()?)? } else { file.network };
    Ok(LoadedInstance { net, sigma, resample, topology_attempt: None })
}

/// Topology-dependent state of one method, shared by all realizations.
struct PreparedMethod {
    label: String,
    cfg: MethodConfig,
    clustering: Clustering,
    solver: AmSolver,
    ledger: MessageLedger,
    /// Fraction of the serial warm-start time spent by the slowest sensor.
    ag_parallel_share: f64,
}

fn clustering_for(kind: MethodKind, net: &Network, seed: u64) -> Result<Clustering> {
    match kind {
        MethodKind::FullyCentralized => Ok(Clustering::whole(net.n_sensors())),
        MethodKind::FullyDistributed => Ok(Clustering::singleton(net.n_sensors())),
        MethodKind::Colored => Ok(Clustering::colored(net)),
        MethodKind::Clustered(q) => Clustering::geographical(net, q, seed),
    }
}

struct MethodRun {
    x: Vec<f64>,
    obv: f64,
    /// `(squared error, objective)` after each iteration.
    curve: Vec<(f64, f64)>,
    time_seq: Duration,
    time_par: Duration,
}

/// Aggregated results of an experiment.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub k: usize,
    pub m: usize,
    pub r: f64,
    pub sigma: f64,
    pub realizations: usize,
    pub iterations: usize,
    pub timing: bool,
    pub crlb_root: Option<f64>,
    pub topology_attempt: Option<u64>,
    pub reports: Vec<RunReport>,
    /// `(method label, clustering)` in method order.
    pub clusterings: Vec<(String, Clustering)>,
}

/// Initial point of realization `index`: uniform in `[-h, h]^{nN}`.
pub fn initial_point(seed: u64, index: usize, len: usize, half_width: f64) -> Vec<f64> {
    let mut s = Stream::new(seed, tag::INITIAL_POINT, index as u64);
    (0..len).map(|_| s.uniform_in(-half_width, half_width)).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let inst = load_instance(&cfg.instance, cfg.seed)?;
    let net = &inst.net;
    let n = net.dim();
    let base = ProblemMatrices::build(net)?;
    let crlb = if inst.sigma > 0.0 && net.truth().is_some() {
        match crlb_root(net, inst.sigma) {
            Ok(v) => Some(v),
            Err(Error::SingularFim) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let max_deg = (0..net.n_sensors()).map(|i| net.degree(i)).max().unwrap_or(0) as f64;
    let sum_deg = (0..net.n_sensors()).map(|i| net.degree(i)).sum::<usize>() as f64;
    let methods = cfg
        .methods
        .iter()
        .map(|m| {
            let kind = m.kind()?;
            let clustering = clustering_for(kind, net, cfg.seed)?;
            let solver = AmSolver::with_matrices(net, &base, &clustering)?;
            let ledger = message_accounting(kind, Some(&clustering), net)?;
            let ag_parallel_share = if kind == MethodKind::FullyCentralized { 1.0 } else { max_deg / sum_deg };
            Ok(PreparedMethod { label: m.label()?, cfg: m.clone(), clustering, solver, ledger, ag_parallel_share })
        })
        .collect::<Result<Vec<_>>>()?;

    let realization = |l: usize| -> Result<Vec<MethodRun>> {
        let net_l = if inst.resample { sample_noise(net, inst.sigma, cfg.seed, l)?.net } else { net.clone() };
        let mats = base.rebind(&net_l)?;
        let x0 = initial_point(cfg.seed, l, net.n_sensors() * n, cfg.x0_half_width);
        let u0 = vec![0.0; net_l.n_edges() * n];
        let truth = net_l.truth();
        methods
            .iter()
            .map(|pm| {
                let solver_cfg = SolverConfig {
                    max_iters: cfg.iterations,
                    ag_iters: pm.cfg.ag_iters,
                    tolerance: None,
                    record_history: false,
                    parallel: cfg.parallel,
                };
                let mut curve = Vec::new();
                let mut observer = |_: usize, x: &[f64]| {
                    if cfg.curves {
                        let err = truth.map_or(f64::NAN, |t| x.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum());
                        curve.push((err, objective_orig(&net_l, x)));
                    }
                };
                let (state, trace) = pm.solver.run_observed(&net_l, &mats, &x0, &u0, &solver_cfg, &mut observer)?;
                let time_par = trace.ag_time.mul_f64(pm.ag_parallel_share) + trace.am_time.mul_f64(pm.ledger.speedup_factor());
                Ok(MethodRun {
                    obv: objective_orig(&net_l, &state.x),
                    x: state.x,
                    curve,
                    time_seq: trace.ag_time + trace.am_time,
                    time_par,
                })
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let runs: Vec<Vec<MethodRun>> = if cfg.parallel {
        (0..cfg.realizations).into_par_iter().map(realization).collect::<Result<_>>()?
    } else {
        (0..cfg.realizations).map(realization).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Vec<MethodRun>> = (0..cfg.realizations).map(realization).collect::<Result<_>>()?;

    let r = cfg.realizations as f64;
    let mut reports = Vec::with_capacity(methods.len());
    for (mi, pm) in methods.iter().enumerate() {
        let estimates: Vec<Vec<f64>> = runs.iter().map(|rs| rs[mi].x.clone()).collect();
        let obvs: Vec<f64> = runs.iter().map(|rs| rs[mi].obv).collect();
        let (obv_mean, obv_std) = mean_std(&obvs);
        let (rm, bias_norm) = match net.truth() {
            Some(t) => (rmse(&estimates, Some(t))?, bias_estimate(&estimates, Some(t))?.1),
            None => (f64::NAN, f64::NAN),
        };
        let per_iteration = if cfg.curves {
            (0..cfg.iterations)
                .map(|k| {
                    let err: f64 = runs.iter().map(|rs| rs[mi].curve[k].0).sum();
                    let obv: f64 = runs.iter().map(|rs| rs[mi].curve[k].1).sum();
                    (k + 1, (err / r).sqrt(), obv / r)
                })
                .collect()
        } else {
            Vec::new()
        };
        reports.push(RunReport {
            method: pm.label.clone(),
            realizations: cfg.realizations,
            iterations: cfg.iterations,
            obv_mean,
            obv_std,
            rmse: rm,
            bias_norm,
            crlb_root: crlb,
            per_iteration,
            time_seq_s: runs.iter().map(|rs| rs[mi].time_seq.as_secs_f64()).sum(),
            time_par_s: runs.iter().map(|rs| rs[mi].time_par.as_secs_f64()).sum(),
            messages: pm.ledger.clone(),
        });
    }

    Ok(ExperimentReport {
        k: net.n_sensors() + net.n_anchors(),
        m: net.n_anchors(),
        r: net.radius(),
        sigma: inst.sigma,
        realizations: cfg.realizations,
        iterations: cfg.iterations,
        timing: cfg.timing,
        crlb_root: crlb,
        topology_attempt: inst.topology_attempt,
        reports,
        clusterings: methods.into_iter().map(|pm| (pm.label, pm.clustering)).collect(),
    })
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9e}")
    } else {
        "n/a".to_string()
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    invalid(format!("csv: {e}"))
}

/// One row per method. Message totals cover one run of `iters` iterations.
pub fn aggregate_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AGGREGATE_HEADER).map_err(csv_err)?;
    for rep in &report.reports {
        let iters = report.iterations;
        let time = |t: f64| if report.timing { num(t) } else { "n/a".to_string() };
        w.write_record([
            rep.method.clone(),
            report.k.to_string(),
            report.m.to_string(),
            num(report.r),
            num(report.sigma),
            report.realizations.to_string(),
            iters.to_string(),
            num(rep.obv_mean),
            num(rep.obv_std),
            num(rep.rmse),
            num(rep.bias_norm),
            rep.crlb_root.map_or("n/a".to_string(), num),
            time(rep.time_seq_s),
            time(rep.time_par_s),
            (rep.messages.in_total() * iters).to_string(),
            (rep.messages.out_total() * iters).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Long-format `(method, iteration, rmse, obv)` rows plus one `sqrt_crlb`
/// reference row; only the header when no curves were recorded.
pub fn emit_plotdata(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    let mut any = false;
    for rep in &report.reports {
        for &(k, rm, obv) in &rep.per_iteration {
            any = true;
            w.write_record([rep.method.clone(), k.to_string(), num(rm), num(obv)]).map_err(csv_err)?;
        }
    }
    if any {
        if let Some(c) = report.crlb_root {
            w.write_record([CRLB_SERIES.to_string(), String::new(), num(c), String::new()]).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `sensor cluster` lines (1-based sensor ids) under a `kind` line.
pub fn clustering_text(clustering: &Clustering) -> String {
    let mut out = format!("kind {}\n", clustering.kind().name());
    for (i, c) in clustering.assignment().iter().enumerate() {
        out.push_str(&format!("{} {}\n", i + 1, c));
    }
    out
}

/// Writes `results.csv`, `curves.csv` and `clustering_<method>.txt` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    put("results.csv".into(), aggregate_csv(report)?)?;
    put("curves.csv".into(), emit_plotdata(report)?)?;
    for (label, c) in &report.clusterings {
        put(format!("clustering_{label}.txt"), clustering_text(c))?;
    }
    Ok(written)
}
