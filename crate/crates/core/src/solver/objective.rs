//! Objective evaluations in edge-sum form.

use crate::network::{norm, Network};

use super::updates::ZERO_NORM;

/// `G(x, u) = Σ_edges ‖v‖² − 2 d uᵀv` with `v = x_i − x_j` or `x_i − a_k`.
/// The ball constraint on `u` is not checked.
pub fn objective_g(net: &Network, x: &[f64], u: &[f64]) -> f64 {
    let n = net.dim();
    let mut v = vec![0.0; n];
    let mut total = 0.0;
    for e in 0..net.n_edges() {
        net.edge_vector(e, x, &mut v);
        let d = net.dist(e);
        let ue = &u[e * n..(e + 1) * n];
        let sq: f64 = v.iter().map(|a| a * a).sum();
        let lin: f64 = v.iter().zip(ue).map(|(a, b)| a * b).sum();
        total += sq - 2.0 * d * lin;
    }
    total
}

/// `Σ_edges (‖v‖ − d)²`, the least-squares range objective.
pub fn objective_orig(net: &Network, x: &[f64]) -> f64 {
    let n = net.dim();
    let mut v = vec![0.0; n];
    let mut total = 0.0;
    for e in 0..net.n_edges() {
        net.edge_vector(e, x, &mut v);
        let r = norm(&v) - net.dist(e);
        total += r * r;
    }
    total
}

/// `Σ_edges d²`, the constant separating [`objective_orig`] from `G` at the
/// maximizing `u`.
pub fn squared_distance_sum(net: &Network) -> f64 {
    (0..net.n_edges()).map(|e| net.dist(e).powi(2)).sum()
}

/// `G(x_old, u) − G(x_new, u)`, evaluated from the per-edge differences so the
/// result stays accurate when the two points are close.
pub fn g_decrease_x(net: &Network, x_old: &[f64], x_new: &[f64], u: &[f64]) -> f64 {
    let n = net.dim();
    let mut v_old = vec![0.0; n];
    let mut v_new = vec![0.0; n];
    let delta: Vec<f64> = x_old.iter().zip(x_new).map(|(a, b)| a - b).collect();
    let mut dv = vec![0.0; n];
    let k1 = net.sensor_edges().len();
    let mut total = 0.0;
    for e in 0..net.n_edges() {
        net.edge_vector(e, x_old, &mut v_old);
        net.edge_vector(e, x_new, &mut v_new);
        if e < k1 {
            let se = net.sensor_edges()[e];
            for c in 0..n {
                dv[c] = delta[se.i * n + c] - delta[se.j * n + c];
            }
        } else {
            let ae = net.anchor_edges()[e - k1];
            dv.copy_from_slice(&delta[ae.sensor * n..(ae.sensor + 1) * n]);
        }
        let d = net.dist(e);
        let ue = &u[e * n..(e + 1) * n];
        for c in 0..n {
            total += dv[c] * (v_old[c] + v_new[c]) - 2.0 * d * ue[c] * dv[c];
        }
    }
    total
}

/// `G(x, u_old) − G(x, u_new) = Σ 2 d (u_new − u_old)ᵀ v`.
///
/// Where `u_new` is the normalized edge vector `v̂`, the edge term is
/// evaluated as `d ‖v‖ (‖v̂ − u_old‖² + 1 − ‖u_old‖²)`, which keeps its
/// relative accuracy as `u_old → v̂`; a `u_old` within `1e-12` of the unit
/// sphere is taken as exactly normalized there.
pub fn g_decrease_u(net: &Network, x: &[f64], u_old: &[f64], u_new: &[f64]) -> f64 {
    let n = net.dim();
    let mut v = vec![0.0; n];
    let mut total = 0.0;
    for e in 0..net.n_edges() {
        net.edge_vector(e, x, &mut v);
        let d = net.dist(e);
        let uo = &u_old[e * n..(e + 1) * n];
        let un = &u_new[e * n..(e + 1) * n];
        let len = norm(&v);
        let normalized = len >= ZERO_NORM && (0..n).all(|c| (un[c] - v[c] / len).abs() <= 1e-12);
        if normalized {
            let gap: f64 = (0..n).map(|c| (v[c] / len - uo[c]).powi(2)).sum();
            let slack = 1.0 - uo.iter().map(|a| a * a).sum::<f64>();
            let slack = if slack.abs() <= 1e-12 { 0.0 } else { slack };
            total += d * len * (gap + slack);
        } else {
            for c in 0..n {
                total += 2.0 * d * (un[c] - uo[c]) * v[c];
            }
        }
    }
    total
}
