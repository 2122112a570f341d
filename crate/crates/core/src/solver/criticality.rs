//! First-order optimality residuals for `F(x, u)`.

use crate::network::{norm, Network};

use super::updates::sensor_rhs;

/// Below this norm `u` is considered interior to the unit ball.
const BOUNDARY: f64 = 1.0 - 1e-12;

/// Residuals of `0 ∈ ∂F(x, u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalityReport {
    /// `max_i ‖(P x − W u − c)_i‖`, half the `x`-gradient per sensor.
    pub res_x: f64,
    /// `max_e dist(2 d_e v_e, N_B(u_e))`, distance of the negative
    /// `u`-gradient from the normal cone of the unit ball.
    pub res_u: f64,
}

impl CriticalityReport {
    pub fn is_critical(&self, eps: f64) -> bool {
        self.res_x <= eps && self.res_u <= eps
    }
}

pub fn criticality(net: &Network, x: &[f64], u: &[f64]) -> CriticalityReport {
    let n = net.dim();
    let mut rhs = vec![0.0; n];
    let mut res_x = 0.0f64;
    for i in 0..net.n_sensors() {
        sensor_rhs(net, i, x, u, &mut rhs, |_| false);
        let m = net.degree(i) as f64;
        let r = (0..n).map(|c| (m * x[i * n + c] - rhs[c]).powi(2)).sum::<f64>().sqrt();
        res_x = res_x.max(r);
    }
    let mut v = vec![0.0; n];
    let mut res_u = 0.0f64;
    for e in 0..net.n_edges() {
        net.edge_vector(e, x, &mut v);
        let d = net.dist(e);
        let ue = &u[e * n..(e + 1) * n];
        let g: Vec<f64> = v.iter().map(|a| 2.0 * d * a).collect();
        let r = if norm(ue) < BOUNDARY {
            norm(&g)
        } else {
            let unit = norm(ue);
            let lambda = (g.iter().zip(ue).map(|(a, b)| a * b).sum::<f64>() / unit).max(0.0);
            (0..n).map(|c| (g[c] - lambda * ue[c] / unit).powi(2)).sum::<f64>().sqrt()
        };
        res_u = res_u.max(r);
    }
    CriticalityReport { res_x, res_u }
}
