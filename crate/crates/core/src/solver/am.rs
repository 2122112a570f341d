//! Alternating minimization over cluster blocks of `x` and the unit vectors `u`.

use std::time::{Duration, Instant};

use crate::clustering::{ClusterKind, Clustering};
use crate::error::{invalid, Result};
use crate::matrices::ProblemMatrices;
use crate::network::{norm, Network};

use super::ag::ag_warmstart_observed;
use super::objective::{g_decrease_u, g_decrease_x, objective_g};
use super::updates::{sensor_rhs, update_u_with, BlockSolver};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Location-update budget; warm-start iterations count against it.
    pub max_iters: usize,
    /// Accelerated-gradient iterations run before the first sweep.
    pub ag_iters: usize,
    /// Stop once a sweep moves `x` by at most this much (Euclidean norm).
    pub tolerance: Option<f64>,
    /// Keep a [`SweepRecord`] per sweep.
    pub record_history: bool,
    /// Use rayon for edge-wise and independent-cluster work.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 1000, ag_iters: 0, tolerance: None, record_history: false, parallel: cfg!(feature = "parallel") }
    }
}

/// Diagnostics of one sweep `(x^k, u^k) → (x^{k+1}, u^{k+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    /// `G(x^k, u^k)`.
    pub g_start: f64,
    /// `G(x^{k+1}, u^k)`.
    pub g_after_x: f64,
    /// `G(x^{k+1}, u^{k+1})`.
    pub g_after_u: f64,
    /// `G(x^k, u^k) − G(x^{k+1}, u^k)`, from edge-wise differences.
    pub x_decrease: f64,
    /// `G(x^{k+1}, u^k) − G(x^{k+1}, u^{k+1})`, from edge-wise differences.
    pub u_decrease: f64,
    /// `‖x^{k+1} − x^k‖`.
    pub displacement: f64,
    /// Norm of `(∇_x G(x^{k+1}, u^k), −2 d (v(x^{k+1}) − v(x^k)))`, a
    /// subgradient of `F` at `(x^{k+1}, u^{k+1})`.
    pub y_norm: f64,
}

impl SweepRecord {
    /// Total decrease over the sweep.
    pub fn decrease(&self) -> f64 {
        self.x_decrease + self.u_decrease
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// Location updates so far, warm-start iterations included.
    pub iter: usize,
    pub history: Vec<SweepRecord>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub ag_iterations: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub ag_time: Duration,
    pub am_time: Duration,
}

/// Block structure of a clustering with each coupled block pre-factored.
/// Depends on topology only, so one solver serves every noise realization.
#[derive(Clone, Debug)]
pub struct AmSolver {
    kind: ClusterKind,
    blocks: Vec<BlockSolver>,
    assignment: Vec<usize>,
    n_sensors: usize,
    dim: usize,
}

impl AmSolver {
    pub fn new(net: &Network, clustering: &Clustering) -> Result<Self> {
        clustering.validate(net)?;
        let blocks = clustering.clusters().iter().map(|c| BlockSolver::new(net, c)).collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(net, clustering, blocks))
    }

    /// Like [`AmSolver::new`], reusing the full factorization in `mats` for a
    /// whole-network block.
    pub fn with_matrices(net: &Network, mats: &ProblemMatrices, clustering: &Clustering) -> Result<Self> {
        if clustering.len() != 1 {
            return Self::new(net, clustering);
        }
        clustering.validate(net)?;
        if mats.n_sensors() != net.n_sensors() {
            return Err(invalid("matrices do not match the network"));
        }
        let members: Vec<usize> = (0..net.n_sensors()).collect();
        let block = if clustering.clusters()[0] == members && !net.sensor_edges().is_empty() {
            BlockSolver::with_factor(members, mats.factor_arc())
        } else {
            BlockSolver::new(net, &clustering.clusters()[0])?
        };
        Ok(Self::assemble(net, clustering, vec![block]))
    }

    fn assemble(net: &Network, clustering: &Clustering, blocks: Vec<BlockSolver>) -> Self {
        Self {
            kind: clustering.kind(),
            blocks,
            assignment: clustering.assignment().to_vec(),
            n_sensors: net.n_sensors(),
            dim: net.dim(),
        }
    }

    pub fn kind(&self) -> ClusterKind {
        self.kind
    }

    pub fn blocks(&self) -> &[BlockSolver] {
        &self.blocks
    }

    fn check(&self, net: &Network) -> Result<()> {
        if net.n_sensors() != self.n_sensors || net.dim() != self.dim {
            return Err(invalid("network does not match the solver"));
        }
        Ok(())
    }

    /// One Gauss-Seidel pass over the blocks in index order, `u` fixed.
    pub fn x_step(&self, net: &Network, x: &mut [f64], u: &[f64], parallel: bool) {
        for (id, block) in self.blocks.iter().enumerate() {
            block.apply(net, x, u, &self.assignment, id, parallel);
        }
    }

    /// Block sweep over `x` followed by the `u` update.
    /// Returns `‖x^{k+1} − x^k‖`; with `record`, appends a [`SweepRecord`].
    pub fn sweep(&self, net: &Network, state: &mut SolverState, record: bool, parallel: bool) -> f64 {
        self.timed_sweep(net, state, record, parallel).0
    }

    fn timed_sweep(&self, net: &Network, state: &mut SolverState, record: bool, parallel: bool) -> (f64, Duration) {
        let x_old = state.x.clone();
        let start = Instant::now();
        self.x_step(net, &mut state.x, &state.u, parallel);
        let u_new = update_u_with(net, &state.x, parallel);
        let elapsed = start.elapsed();
        let displacement = diff_norm(&x_old, &state.x);
        if record {
            let rec = sweep_record(net, &x_old, &state.x, &state.u, &u_new, displacement);
            state.history.push(rec);
        }
        state.u = u_new;
        state.iter += 1;
        (displacement, elapsed)
    }

    pub fn run(&self, net: &Network, mats: &ProblemMatrices, x0: &[f64], u0: &[f64], cfg: &SolverConfig) -> Result<(SolverState, RunTrace)> {
        self.run_observed(net, mats, x0, u0, cfg, &mut |_, _| {})
    }

    /// Runs the warm start (if any) and the sweeps, calling
    /// `observer(iter, x)` after every location update. Observer time is not
    /// included in the trace timings.
    pub fn run_observed(
        &self,
        net: &Network,
        mats: &ProblemMatrices,
        x0: &[f64],
        u0: &[f64],
        cfg: &SolverConfig,
        observer: &mut dyn FnMut(usize, &[f64]),
    ) -> Result<(SolverState, RunTrace)> {
        self.check(net)?;
        let n = net.dim();
        if x0.len() != net.n_sensors() * n || u0.len() != net.n_edges() * n {
            return Err(invalid("initial point has the wrong length"));
        }
        if cfg.ag_iters > cfg.max_iters {
            return Err(invalid("warm-start iterations exceed the iteration budget"));
        }
        let mut trace = RunTrace { ag_iterations: cfg.ag_iters, ..Default::default() };
        let mut paused = Duration::ZERO;
        let start = Instant::now();
        let x = if cfg.ag_iters > 0 {
            ag_warmstart_observed(net, mats, u0, x0, cfg.ag_iters, &mut |k, x| {
                let t = Instant::now();
                observer(k, x);
                paused += t.elapsed();
            })
        } else {
            x0.to_vec()
        };
        trace.ag_time = start.elapsed().saturating_sub(paused);

        let mut state = SolverState { x, u: u0.to_vec(), iter: cfg.ag_iters, history: Vec::new() };
        let mut am_time = Duration::ZERO;
        for _ in cfg.ag_iters..cfg.max_iters {
            let (moved, elapsed) = self.timed_sweep(net, &mut state, cfg.record_history, cfg.parallel);
            am_time += elapsed;
            trace.sweeps += 1;
            observer(state.iter, &state.x);
            if cfg.tolerance.is_some_and(|tol| moved <= tol) {
                trace.converged = true;
                break;
            }
        }
        trace.am_time = am_time;
        Ok((state, trace))
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn sweep_record(net: &Network, x_old: &[f64], x_new: &[f64], u_old: &[f64], u_new: &[f64], displacement: f64) -> SweepRecord {
    let n = net.dim();
    let mut y2 = 0.0;
    let mut rhs = vec![0.0; n];
    for i in 0..net.n_sensors() {
        sensor_rhs(net, i, x_new, u_old, &mut rhs, |_| false);
        let m = net.degree(i) as f64;
        for c in 0..n {
            y2 += (2.0 * (m * x_new[i * n + c] - rhs[c])).powi(2);
        }
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for e in 0..net.n_edges() {
        net.edge_vector(e, x_new, &mut a);
        net.edge_vector(e, x_old, &mut b);
        let d = net.dist(e);
        let dv: Vec<f64> = a.iter().zip(&b).map(|(p, q)| -2.0 * d * (p - q)).collect();
        y2 += norm(&dv).powi(2);
    }
    SweepRecord {
        g_start: objective_g(net, x_old, u_old),
        g_after_x: objective_g(net, x_new, u_old),
        g_after_u: objective_g(net, x_new, u_new),
        x_decrease: g_decrease_x(net, x_old, x_new, u_old),
        u_decrease: g_decrease_u(net, x_new, u_old, u_new),
        displacement,
        y_norm: y2.sqrt(),
    }
}

/// Builds the matrices and block solver for `clustering` and runs from
/// `(x0, u = 0)`.
pub fn solve(net: &Network, clustering: &Clustering, x0: &[f64], cfg: &SolverConfig) -> Result<(SolverState, RunTrace)> {
    let mats = ProblemMatrices::build(net)?;
    let solver = AmSolver::with_matrices(net, &mats, clustering)?;
    let u0 = vec![0.0; net.n_edges() * net.dim()];
    solver.run(net, &mats, x0, &u0, cfg)
}
