//! Exact block minimizations of `F(x, u)`.

use crate::error::Result;
use crate::matrices::{reduced_system_matrix, ProblemMatrices};
use crate::network::{Network, Node};
use crate::sparse::EnvelopeCholesky;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `‖v‖` below this is treated as `v = 0`.
pub const ZERO_NORM: f64 = 1e-300;

fn normalize_into(v: &[f64], out: &mut [f64]) {
    let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if len < ZERO_NORM {
        out.iter_mut().for_each(|o| *o = 0.0);
    } else {
        for (o, a) in out.iter_mut().zip(v) {
            *o = a / len;
        }
    }
}

/// Minimizes `F(x, ·)`: `u_e = v_e / ‖v_e‖`, or `0` when `v_e = 0`.
pub fn update_u(net: &Network, x: &[f64]) -> Vec<f64> {
    update_u_with(net, x, false)
}

/// [`update_u`], optionally split over edges with rayon.
pub fn update_u_with(net: &Network, x: &[f64], parallel: bool) -> Vec<f64> {
    let n = net.dim();
    let mut u = vec![0.0; net.n_edges() * n];
    let edge = |(e, out): (usize, &mut [f64])| {
        let mut v = [0.0; 8];
        if n <= 8 {
            net.edge_vector(e, x, &mut v[..n]);
            normalize_into(&v[..n], out);
        } else {
            let mut v = vec![0.0; n];
            net.edge_vector(e, x, &mut v);
            normalize_into(&v, out);
        }
    };
    #[cfg(feature = "parallel")]
    if parallel {
        u.par_chunks_mut(n).enumerate().for_each(edge);
        return u;
    }
    let _ = parallel;
    u.chunks_mut(n).enumerate().for_each(edge);
    u
}

/// `x = P⁻¹ (W u + c)`.
pub fn update_x_centralized(mats: &ProblemMatrices, u: &[f64]) -> Vec<f64> {
    mats.spd_solve(&mats.rhs(u))
}

/// Accumulates `Σ_e ±d_e u_e + Σ anchors a_k + Σ_{sensor peers not in block} x_j`
/// for sensor `i` into `out`.
pub(crate) fn sensor_rhs(net: &Network, i: usize, x: &[f64], u: &[f64], out: &mut [f64], in_block: impl Fn(usize) -> bool) {
    let n = net.dim();
    out.iter_mut().for_each(|o| *o = 0.0);
    for inc in net.neighbors(i) {
        let coef = inc.sign * net.dist(inc.edge);
        let ue = &u[inc.edge * n..(inc.edge + 1) * n];
        for c in 0..n {
            out[c] += coef * ue[c];
        }
        match inc.peer {
            Node::Sensor(j) => {
                if !in_block(j) {
                    for c in 0..n {
                        out[c] += x[j * n + c];
                    }
                }
            }
            Node::Anchor(k) => {
                let a = net.anchor(k);
                for c in 0..n {
                    out[c] += a[c];
                }
            }
        }
    }
}

/// Minimizer of `F` over `x_i` alone:
/// `x_i = (Σ_{sensor peers} x_j + Σ_e ±d_e u_e + Σ_{anchor peers} a_k) / M_i`.
/// Peers are read from `x` as given, so updating in place in index order
/// gives the Gauss-Seidel sweep.
pub fn update_x_sensor(net: &Network, i: usize, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.dim()];
    sensor_update_into(net, i, x, u, &mut out);
    out
}

pub(crate) fn sensor_update_into(net: &Network, i: usize, x: &[f64], u: &[f64], out: &mut [f64]) {
    sensor_rhs(net, i, x, u, out, |_| false);
    let m = net.degree(i) as f64;
    out.iter_mut().for_each(|o| *o /= m);
}

/// Pre-factored principal block of `P̃` for one cluster.
#[derive(Clone, Debug)]
pub struct BlockSolver {
    members: Vec<usize>,
    factor: Option<std::sync::Arc<EnvelopeCholesky>>,
}

impl BlockSolver {
    /// Factors the principal submatrix on `members` unless the cluster has no
    /// internal sensor-sensor edge, in which case each member is updated on
    /// its own.
    pub fn new(net: &Network, members: &[usize]) -> Result<Self> {
        let mut inside = vec![false; net.n_sensors()];
        for &i in members {
            inside[i] = true;
        }
        let coupled = members.iter().any(|&i| {
            net.neighbors(i).iter().any(|inc| matches!(inc.peer, Node::Sensor(j) if inside[j]))
        });
        let factor = if coupled {
            let sub = reduced_system_matrix(net).principal_submatrix(members);
            Some(std::sync::Arc::new(EnvelopeCholesky::factor(&sub)?))
        } else {
            None
        };
        Ok(Self { members: members.to_vec(), factor })
    }

    pub(crate) fn with_factor(members: Vec<usize>, factor: std::sync::Arc<EnvelopeCholesky>) -> Self {
        Self { members, factor: Some(factor) }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// True when members do not interact and can be updated concurrently.
    pub fn is_independent(&self) -> bool {
        self.factor.is_none()
    }

    /// Replaces the block's entries of `x` with the exact minimizer of `F`
    /// over the block, other blocks and `u` fixed. Members are the sensors
    /// with `assignment[j] == id`.
    pub(crate) fn apply(&self, net: &Network, x: &mut [f64], u: &[f64], assignment: &[usize], id: usize, parallel: bool) {
        let n = net.dim();
        match &self.factor {
            None => {
                #[cfg(feature = "parallel")]
                if parallel && self.members.len() > 1 {
                    let xr: &[f64] = x;
                    let updates: Vec<Vec<f64>> =
                        self.members.par_iter().map(|&i| update_x_sensor(net, i, xr, u)).collect();
                    for (&i, p) in self.members.iter().zip(updates) {
                        x[i * n..(i + 1) * n].copy_from_slice(&p);
                    }
                    return;
                }
                let _ = parallel;
                let mut buf = vec![0.0; n];
                for &i in &self.members {
                    sensor_update_into(net, i, x, u, &mut buf);
                    x[i * n..(i + 1) * n].copy_from_slice(&buf);
                }
            }
            Some(factor) => {
                let mut rhs = vec![0.0; self.members.len() * n];
                for (k, &i) in self.members.iter().enumerate() {
                    sensor_rhs(net, i, x, u, &mut rhs[k * n..(k + 1) * n], |j| assignment[j] == id);
                }
                let z = factor.solve_kron(&rhs, n);
                for (k, &i) in self.members.iter().enumerate() {
                    x[i * n..(i + 1) * n].copy_from_slice(&z[k * n..(k + 1) * n]);
                }
            }
        }
    }
}

/// Exact minimizer of `F` over the block `cluster`; returns the new block,
/// concatenated in the order of `cluster`.
pub fn update_x_cluster(net: &Network, cluster: &[usize], x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let n = net.dim();
    let block = BlockSolver::new(net, cluster)?;
    let mut assignment = vec![usize::MAX; net.n_sensors()];
    for &i in cluster {
        assignment[i] = 0;
    }
    let mut work = x.to_vec();
    block.apply(net, &mut work, u, &assignment, 0, false);
    Ok(cluster.iter().flat_map(|&i| work[i * n..(i + 1) * n].to_vec()).collect())
}
