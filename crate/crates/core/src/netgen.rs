//! Random network generation and Gaussian range noise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{Network, NetworkParts};
use crate::rng::{tag, Stream};

/// Parameters of a random instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Total node count, anchors included.
    #[serde(rename = "K")]
    pub k: usize,
    /// Anchor count.
    pub m: usize,
    /// Communication radius.
    pub r: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Per-axis bounds of the sampling box.
    #[serde(default = "default_box")]
    pub bounds: (f64, f64),
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
}

fn default_box() -> (f64, f64) {
    (-0.5, 0.5)
}
fn default_dim() -> usize {
    2
}
fn default_realizations() -> usize {
    50
}

impl GenSpec {
    pub fn new(k: usize, m: usize, r: f64, sigma: f64) -> Self {
        Self { k, m, r, sigma, bounds: default_box(), dim: 2, seed: 0, realizations: default_realizations() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.m && self.m < self.k) {
            return Err(invalid("need 1 <= m < K"));
        }
        if !(self.r > 0.0) {
            return Err(invalid("radius must be positive"));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid("sigma must be non-negative"));
        }
        if self.realizations == 0 {
            return Err(invalid("need at least one realization"));
        }
        if self.dim == 0 || !(self.bounds.0 < self.bounds.1) {
            return Err(invalid("bad box or dimension"));
        }
        Ok(())
    }

    /// Named random-network parameter sets (`K, m, r, sigma`).
    pub fn preset(name: &str) -> Option<Self> {
        let (k, m, r, sigma) = match name {
            "rand-1000" => (1000, 20, 0.061, 0.00427),
            "rand-2000" => (2000, 40, 0.043, 0.00301),
            "rand-3000" => (3000, 60, 0.035, 0.00245),
            "rand-5000" => (5000, 100, 0.029, 0.00203),
            "rand-10000" => (10000, 200, 0.025, 0.00172),
            "rand-985-m5" => (985, 5, 0.061, 0.00427),
            "rand-990-m10" => (990, 10, 0.061, 0.00427),
            "rand-1010-m30" => (1010, 30, 0.061, 0.00427),
            "rand-1000-deg7" => (1000, 20, 0.049, 0.00340),
            "rand-1000-deg9" => (1000, 20, 0.057, 0.00398),
            "rand-1000-deg13" => (1000, 20, 0.067, 0.00466),
            _ => return None,
        };
        Some(Self::new(k, m, r, sigma))
    }

    pub const PRESETS: [&'static str; 11] = [
        "rand-1000",
        "rand-2000",
        "rand-3000",
        "rand-5000",
        "rand-10000",
        "rand-985-m5",
        "rand-990-m10",
        "rand-1010-m30",
        "rand-1000-deg7",
        "rand-1000-deg9",
        "rand-1000-deg13",
    ];
}

/// A noisy copy of a topology.
#[derive(Clone, Debug)]
pub struct Realization {
    pub net: Network,
    pub index: usize,
    pub noise_seed: u64,
}

/// Draws `K` points uniformly in the box (coordinates in node order, axis by
/// axis), makes the first `m` anchors, and connects every non-anchor pair
/// within distance `r`. Returned distances are the true ones.
pub fn generate_topology(spec: &GenSpec) -> Result<Network> {
    generate_topology_attempt(spec, 0)
}

/// [`generate_topology`] drawing from stream `attempt` of the seed, so retries
/// after a disconnected draw give fresh point sets without touching other seeds.
pub fn generate_topology_attempt(spec: &GenSpec, attempt: u64) -> Result<Network> {
    spec.validate()?;
    let n = spec.dim;
    let mut stream = Stream::new(spec.seed, tag::TOPOLOGY, attempt);
    let coords: Vec<f64> = (0..spec.k * n).map(|_| stream.uniform_in(spec.bounds.0, spec.bounds.1)).collect();
    let (anchors, sensors) = coords.split_at(spec.m * n);
    let n_sensors = spec.k - spec.m;
    let point = |s: &[f64], i: usize| -> Vec<f64> { s[i * n..(i + 1) * n].to_vec() };

    let mut sensor_edges = Vec::new();
    let mut anchor_edges = Vec::new();
    for i in 0..n_sensors {
        let xi = point(sensors, i);
        for j in i + 1..n_sensors {
            let d = dist(&xi, &sensors[j * n..(j + 1) * n]);
            if d <= spec.r && d > 0.0 {
                sensor_edges.push((i, j, d));
            }
        }
        for k in 0..spec.m {
            let d = dist(&xi, &anchors[k * n..(k + 1) * n]);
            if d <= spec.r && d > 0.0 {
                anchor_edges.push((i, k, d));
            }
        }
    }
    Network::new(NetworkParts {
        dim: n,
        n_sensors,
        anchors: anchors.to_vec(),
        truth: Some(sensors.to_vec()),
        sensor_edges,
        anchor_edges,
        radius: spec.r,
    })
}

/// Draws attempts `0, 1, ...` of [`generate_topology_attempt`] until the
/// network is connected, up to `attempts` tries. Returns the attempt used.
pub fn generate_connected(spec: &GenSpec, attempts: usize) -> Result<(Network, u64)> {
    let mut last = None;
    for t in 0..attempts as u64 {
        match generate_topology_attempt(spec, t) {
            Ok(net) => return Ok((net, t)),
            Err(e @ Error::Disconnected { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| invalid("no attempts")))
}

/// Adds i.i.d. `N(0, sigma²)` noise to the true distances of `net`.
/// Non-positive draws are redrawn from the same stream.
pub fn sample_noise(net: &Network, sigma: f64, seed: u64, index: usize) -> Result<Realization> {
    let truth = net.true_distances()?;
    let noise_seed = seed;
    let mut stream = Stream::new(seed, tag::NOISE, index as u64);
    let dists: Vec<f64> = truth
        .iter()
        .map(|&d| loop {
            let v = d + sigma * stream.normal();
            if v > 0.0 {
                break v;
            }
        })
        .collect();
    Ok(Realization { net: net.with_distances(&dists)?, index, noise_seed })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
