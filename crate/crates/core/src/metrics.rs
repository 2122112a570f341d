//! Accuracy metrics over realizations, the Cramér-Rao bound for Gaussian range
//! noise, and per-iteration communication and computation tallies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::error::{invalid, Error, Result};
use crate::network::{Network, Node};
use crate::sparse::{EnvelopeCholesky, SparseSym};

fn check_estimates<'a>(estimates: &[Vec<f64>], truth: Option<&'a [f64]>) -> Result<&'a [f64]> {
    let truth = truth.ok_or(Error::MissingTruth)?;
    if estimates.is_empty() {
        return Err(invalid("need at least one estimate"));
    }
    if estimates.iter().any(|e| e.len() != truth.len()) {
        return Err(invalid("estimate length does not match the truth"));
    }
    Ok(truth)
}

/// Total squared error `Σ_l Σ_i ‖x_i^l − x_i^true‖²`.
pub fn squared_error_sum(estimates: &[Vec<f64>], truth: Option<&[f64]>) -> Result<f64> {
    let truth = check_estimates(estimates, truth)?;
    Ok(estimates.iter().map(|e| e.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum())
}

/// `sqrt(Σ_l Σ_i ‖x_i^l − x_i^true‖² / R)`; not divided by the sensor count.
pub fn rmse(estimates: &[Vec<f64>], truth: Option<&[f64]>) -> Result<f64> {
    Ok((squared_error_sum(estimates, truth)? / estimates.len() as f64).sqrt())
}

/// [`rmse`] additionally averaged over the `n_sensors` sensors.
pub fn rmse_per_sensor(estimates: &[Vec<f64>], truth: Option<&[f64]>, n_sensors: usize) -> Result<f64> {
    if n_sensors == 0 {
        return Err(invalid("need at least one sensor"));
    }
    Ok((squared_error_sum(estimates, truth)? / (estimates.len() * n_sensors) as f64).sqrt())
}

/// Mean error over realizations, per coordinate, and the norm of that vector.
pub fn bias_estimate(estimates: &[Vec<f64>], truth: Option<&[f64]>) -> Result<(Vec<f64>, f64)> {
    let truth = check_estimates(estimates, truth)?;
    let r = estimates.len() as f64;
    let bias: Vec<f64> = (0..truth.len()).map(|k| estimates.iter().map(|e| e[k] - truth[k]).sum::<f64>() / r).collect();
    let norm = bias.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok((bias, norm))
}

/// Fisher information of the sensor coordinates for i.i.d. `N(0, σ²)` range
/// noise, evaluated at the true positions.
pub fn fisher_information(net: &Network, sigma: f64) -> Result<SparseSym> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be positive"));
    }
    let truth = net.truth().ok_or(Error::MissingTruth)?;
    let n = net.dim();
    let w = 1.0 / (sigma * sigma);
    let mut fim = SparseSym::zeros(net.n_sensors() * n);
    let mut e = vec![0.0; n];
    for edge in 0..net.n_edges() {
        net.edge_vector(edge, truth, &mut e);
        let len = e.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        e.iter_mut().for_each(|a| *a /= len);
        let (i, peer) = net.ordering().get(edge);
        for c in 0..n {
            for d in c..n {
                fim.add(i * n + c, i * n + d, w * e[c] * e[d]);
            }
        }
        if let Node::Sensor(j) = peer {
            for c in 0..n {
                for d in c..n {
                    fim.add(j * n + c, j * n + d, w * e[c] * e[d]);
                }
                for d in 0..n {
                    fim.add(i * n + c, j * n + d, -w * e[c] * e[d]);
                }
            }
        }
    }
    Ok(fim)
}

/// `sqrt(trace(FIM⁻¹))` over all sensor coordinates.
pub fn crlb_root(net: &Network, sigma: f64) -> Result<f64> {
    let fim = fisher_information(net, sigma)?;
    let chol = EnvelopeCholesky::factor(&fim).map_err(|_| Error::SingularFim)?;
    Ok(chol.inverse_trace().sqrt())
}

/// Solver variants compared in experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    /// Whole-network exact minimization.
    FullyCentralized,
    /// One sensor per block, Gauss-Seidel order.
    FullyDistributed,
    /// Color classes of a greedy coloring, each updated in parallel.
    Colored,
    /// `q` geographical clusters.
    Clustered(usize),
}

impl MethodKind {
    pub fn name(&self) -> String {
        match self {
            MethodKind::FullyCentralized => "am-fc".into(),
            MethodKind::FullyDistributed => "am-fd".into(),
            MethodKind::Colored => "am-cc".into(),
            MethodKind::Clustered(q) => format!("am-u-q{q}"),
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "am-fc" => Ok(Self::FullyCentralized),
            "am-fd" => Ok(Self::FullyDistributed),
            "am-cc" => Ok(Self::Colored),
            _ => {
                let q = s
                    .strip_prefix("am-u-q")
                    .or_else(|| s.strip_prefix("am-u-"))
                    .or_else(|| s.strip_prefix("am-u"))
                    .and_then(|q| q.parse::<usize>().ok())
                    .filter(|&q| q > 0)
                    .ok_or_else(|| invalid(format!("unknown method '{s}'")))?;
                Ok(Self::Clustered(q))
            }
        }
    }
}

/// Per-iteration message and operation counts.
///
/// Every sensor broadcasts its position once (one `R^n` vector) and receives
/// one vector from each neighbour; anchors likewise hear their sensor
/// neighbours, so the receptions over all nodes add up to twice the edge
/// count. Costs are in floating-point operations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageLedger {
    pub method: String,
    /// Messages received by each sensor; empty for centralized solves.
    pub sensor_in: Vec<usize>,
    /// Messages sent by each sensor; empty for centralized solves.
    pub sensor_out: Vec<usize>,
    /// Messages received by each anchor; empty for centralized solves.
    pub anchor_in: Vec<usize>,
    /// Payload per message, in `R^n` vectors.
    pub payload: usize,
    /// Location-update cost of one iteration run serially.
    pub sequential_cost: f64,
    /// Same, counting only the slowest unit of each parallel stage.
    pub parallel_cost: f64,
    /// One-time factorization cost, worst case for a dense factor.
    pub factorization_dense: f64,
    /// One-time factorization cost of the envelope factor actually used.
    pub factorization_sparse: f64,
}

impl MessageLedger {
    pub fn in_total(&self) -> usize {
        self.sensor_in.iter().sum::<usize>() + self.anchor_in.iter().sum::<usize>()
    }

    pub fn out_total(&self) -> usize {
        self.sensor_out.iter().sum()
    }

    pub fn sensor_in_total(&self) -> usize {
        self.sensor_in.iter().sum()
    }

    /// `parallel_cost / sequential_cost`, 1 when nothing runs concurrently.
    pub fn speedup_factor(&self) -> f64 {
        if self.sequential_cost > 0.0 {
            self.parallel_cost / self.sequential_cost
        } else {
            1.0
        }
    }
}

/// Factorization flops, approximated as `|L|² / N`, and solve flops `2 n |L|`
/// for the envelope factor `L` of the block.
fn envelope_costs(net: &Network, members: &[usize]) -> Result<(f64, f64)> {
    let sub = crate::matrices::reduced_system_matrix(net).principal_submatrix(members);
    let chol = EnvelopeCholesky::factor(&sub)?;
    let profile = chol.profile() as f64;
    let factor = profile * profile / members.len().max(1) as f64;
    Ok((factor, 2.0 * net.dim() as f64 * profile))
}

/// Analytic per-iteration tallies for `kind`. `clustering` supplies the blocks
/// of the clustered and colored variants.
pub fn message_accounting(kind: MethodKind, clustering: Option<&Clustering>, net: &Network) -> Result<MessageLedger> {
    let n = net.dim();
    let nf = n as f64;
    let m_total = net.n_edges() as f64;
    let mut ledger = MessageLedger { method: kind.name(), payload: n, ..Default::default() };
    let degrees: Vec<usize> = (0..net.n_sensors()).map(|i| net.degree(i)).collect();
    let sum_deg = degrees.iter().sum::<usize>() as f64;

    if kind == MethodKind::FullyCentralized {
        let all: Vec<usize> = (0..net.n_sensors()).collect();
        let (factor, solve) = envelope_costs(net, &all)?;
        let nn = net.n_sensors() as f64;
        ledger.factorization_dense = nf * nn.powi(3) / 3.0;
        ledger.factorization_sparse = factor;
        ledger.sequential_cost = solve + 2.0 * nf * m_total;
        ledger.parallel_cost = ledger.sequential_cost;
        return Ok(ledger);
    }

    ledger.sensor_in = degrees.clone();
    ledger.sensor_out = vec![1; net.n_sensors()];
    ledger.anchor_in = (0..net.n_anchors()).map(|k| net.anchor_degree(k)).collect();
    ledger.sequential_cost = nf * sum_deg;
    match kind {
        MethodKind::FullyDistributed => ledger.parallel_cost = ledger.sequential_cost,
        MethodKind::Colored => {
            let owned;
            let colors = match clustering {
                Some(c) => c,
                None => {
                    owned = Clustering::colored(net);
                    &owned
                }
            };
            ledger.parallel_cost = nf * colors.clusters().iter().map(|c| c.iter().map(|&i| degrees[i]).max().unwrap_or(0) as f64).sum::<f64>();
        }
        MethodKind::Clustered(_) => {
            let clustering = clustering.ok_or_else(|| invalid("clustered accounting needs the clustering"))?;
            let mut seq = 0.0;
            let mut fact = 0.0;
            for c in clustering.clusters() {
                let (f, s) = envelope_costs(net, c)?;
                fact += f;
                seq += s + nf * c.iter().map(|&i| degrees[i] as f64).sum::<f64>();
            }
            ledger.sequential_cost = seq;
            ledger.parallel_cost = seq;
            ledger.factorization_sparse = fact;
            ledger.factorization_dense = nf * clustering.clusters().iter().map(|c| (c.len() as f64).powi(3) / 3.0).sum::<f64>();
        }
        MethodKind::FullyCentralized => unreachable!(),
    }
    Ok(ledger)
}

/// Aggregated results of one method over all realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub realizations: usize,
    pub iterations: usize,
    pub obv_mean: f64,
    pub obv_std: f64,
    pub rmse: f64,
    pub bias_norm: f64,
    /// `None` when the Fisher information is singular or truth is missing.
    pub crlb_root: Option<f64>,
    /// `(iteration, rmse, obv)` for iterations `1..=iterations`.
    pub per_iteration: Vec<(usize, f64, f64)>,
    /// Serial wall-clock seconds, summed over realizations.
    pub time_seq_s: f64,
    /// Modelled parallel wall-clock seconds, summed over realizations.
    pub time_par_s: f64,
    pub messages: MessageLedger,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkParts;

    fn sensor_with_anchors(anchors: Vec<f64>, edges: Vec<(usize, usize, f64)>) -> Network {
        Network::new(NetworkParts {
            dim: 2,
            n_sensors: 1,
            anchors,
            truth: Some(vec![0.0, 0.0]),
            sensor_edges: vec![],
            anchor_edges: edges,
            radius: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn rmse_examples() {
        let truth = [0.0, 0.0];
        assert_eq!(rmse(&[vec![0.3, 0.4]], Some(&truth)).unwrap(), 0.5);
        assert_eq!(rmse(&[vec![0.0, 0.0]], Some(&truth)).unwrap(), 0.0);
        let two = rmse(&[vec![1.0, 0.0], vec![1.0, 2f64.sqrt()]], Some(&truth)).unwrap();
        assert!((two - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(rmse(&[vec![0.0, 0.0]], None), Err(Error::MissingTruth)));
    }

    #[test]
    fn bias_examples() {
        let truth = [1.0, 1.0];
        let (b, norm) = bias_estimate(&[vec![1.2, 0.9], vec![0.8, 1.1]], Some(&truth)).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15) && norm < 1e-15);
        let (_, norm) = bias_estimate(&vec![vec![1.1, 1.0]; 7], Some(&truth)).unwrap();
        assert!((norm - 0.1).abs() < 1e-12);
    }

    #[test]
    fn crlb_orthogonal_anchors() {
        let net = sensor_with_anchors(vec![1.0, 0.0, 0.0, 1.0], vec![(0, 0, 1.0), (0, 1, 1.0)]);
        let sigma = 0.01;
        assert!((crlb_root(&net, sigma).unwrap() - sigma * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn crlb_single_anchor_is_singular() {
        let net = sensor_with_anchors(vec![1.0, 0.0], vec![(0, 0, 1.0)]);
        assert!(matches!(crlb_root(&net, 0.01), Err(Error::SingularFim)));
    }

    #[test]
    fn method_names_round_trip() {
        for k in [MethodKind::FullyCentralized, MethodKind::FullyDistributed, MethodKind::Colored, MethodKind::Clustered(7)] {
            assert_eq!(k.name().parse::<MethodKind>().unwrap(), k);
        }
        assert_eq!("am-u-12".parse::<MethodKind>().unwrap(), MethodKind::Clustered(12));
        assert!("am-xx".parse::<MethodKind>().is_err());
        assert!("am-u-q0".parse::<MethodKind>().is_err());
    }

    fn path_with_anchor() -> Network {
        Network::new(NetworkParts {
            dim: 2,
            n_sensors: 3,
            anchors: vec![3.0, 0.0],
            truth: None,
            sensor_edges: vec![(0, 1, 1.0), (1, 2, 1.0)],
            anchor_edges: vec![(2, 0, 1.0)],
            radius: 1.5,
        })
        .unwrap()
    }

    #[test]
    fn distributed_counts_on_path() {
        let net = path_with_anchor();
        let l = message_accounting(MethodKind::FullyDistributed, None, &net).unwrap();
        assert_eq!(l.sensor_in, vec![1, 2, 2]);
        assert_eq!(l.sensor_out, vec![1, 1, 1]);
        assert_eq!(l.in_total(), 2 * net.n_edges());
    }

    #[test]
    fn colored_parallel_cost() {
        let net = path_with_anchor();
        let colors = Clustering::colored(&net);
        assert_eq!(colors.clusters(), &[vec![1], vec![0, 2]]);
        let l = message_accounting(MethodKind::Colored, Some(&colors), &net).unwrap();
        assert_eq!(l.parallel_cost, 2.0 * (2.0 + 2.0f64.max(1.0)));
        assert_eq!(l.sequential_cost, 2.0 * 5.0);
    }

    #[test]
    fn centralized_has_no_per_sensor_counts() {
        let net = path_with_anchor();
        let l = message_accounting(MethodKind::FullyCentralized, None, &net).unwrap();
        assert!(l.sensor_in.is_empty() && l.sensor_out.is_empty());
        assert!(l.factorization_sparse > 0.0 && l.sequential_cost > 0.0);
    }

    #[test]
    fn mean_std_small() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
