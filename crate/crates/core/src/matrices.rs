//! Assembly of the quadratic model in matrix form.
//!
//! With `Q` the sensor-sensor incidence matrix, `A` the sensor-anchor
//! indicator matrix and `D` the diagonal of measured distances (all lifted by
//! `⊗ I_n`), the smooth objective reads
//!
//! ```text
//! G(x, u) = xᵀ P x − 2 (W u + c)ᵀ x + 2 sᵀ u + κ
//! P = QᵀQ + AᵀA,   W = [Qᵀ, Aᵀ] D
//! ```
//!
//! where block `i` of `c` is the sum of the positions of `i`'s anchor
//! neighbours, `s` is zero on sensor-sensor edges and `d_ik a_k` on
//! sensor-anchor edges, and `κ = Σ ‖a_k‖²` over sensor-anchor edges. The
//! stationarity system is `P x = W u + c`.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::network::{Network, Node};
use crate::sparse::{EnvelopeCholesky, SparseSym};

/// `P̃ = Q̃ᵀQ̃ + ÃᵀÃ` on the sensor index space: diagonal = `M_i`,
/// off-diagonal `(i, j)` = `-1` for each sensor-sensor edge.
pub fn reduced_system_matrix(net: &Network) -> SparseSym {
    let mut p = SparseSym::zeros(net.n_sensors());
    for e in net.sensor_edges() {
        p.add(e.i, e.i, 1.0);
        p.add(e.j, e.j, 1.0);
        p.add(e.i, e.j, -1.0);
    }
    for e in net.anchor_edges() {
        p.add(e.sensor, e.sensor, 1.0);
    }
    p
}

#[derive(Clone, Debug)]
pub struct ProblemMatrices {
    dim: usize,
    p: Arc<SparseSym>,
    factor: Arc<EnvelopeCholesky>,
    /// Rows of `W` per sensor: `(edge, ±d_edge)`; the `⊗ I_n` lift is implicit.
    w_rows: Vec<Vec<(usize, f64)>>,
    anchor_force: Vec<f64>,
    s: Vec<f64>,
    anchor_const: f64,
}

impl ProblemMatrices {
    /// Assembles the matrices and factors `P̃`.
    pub fn build(net: &Network) -> Result<Self> {
        let p = reduced_system_matrix(net);
        let factor = EnvelopeCholesky::factor(&p)?;
        Ok(Self::with_factor(net, Arc::new(p), Arc::new(factor)))
    }

    /// Reuses the factorization for a network with the same topology but new
    /// distances.
    pub fn rebind(&self, net: &Network) -> Result<Self> {
        if net.dim() != self.dim || net.n_sensors() != self.p.dim() || reduced_system_matrix(net) != *self.p {
            return Err(invalid("network topology differs from the factored one"));
        }
        Ok(Self::with_factor(net, self.p.clone(), self.factor.clone()))
    }

    fn with_factor(net: &Network, p: Arc<SparseSym>, factor: Arc<EnvelopeCholesky>) -> Self {
        let n = net.dim();
        let w_rows = (0..net.n_sensors())
            .map(|i| net.neighbors(i).iter().map(|inc| (inc.edge, inc.sign * net.dist(inc.edge))).collect())
            .collect();
        let mut anchor_force = vec![0.0; net.n_sensors() * n];
        let mut s = vec![0.0; net.n_edges() * n];
        let mut anchor_const = 0.0;
        let k1 = net.sensor_edges().len();
        for (l, e) in net.anchor_edges().iter().enumerate() {
            let a = net.anchor(e.anchor);
            for c in 0..n {
                anchor_force[e.sensor * n + c] += a[c];
                s[(k1 + l) * n + c] = e.dist * a[c];
            }
            anchor_const += a.iter().map(|v| v * v).sum::<f64>();
        }
        Self { dim: n, p, factor, w_rows, anchor_force, s, anchor_const }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.p.dim()
    }

    /// The reduced matrix `P̃` (so `P = P̃ ⊗ I_n`).
    pub fn reduced(&self) -> &SparseSym {
        &self.p
    }

    pub fn factor(&self) -> &EnvelopeCholesky {
        &self.factor
    }

    pub fn factor_arc(&self) -> Arc<EnvelopeCholesky> {
        self.factor.clone()
    }

    pub fn anchor_force(&self) -> &[f64] {
        &self.anchor_force
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// `Σ ‖a_k‖²` over sensor-anchor edges; the constant dropped by the matrix form.
    pub fn anchor_const(&self) -> f64 {
        self.anchor_const
    }

    pub fn p_mul(&self, x: &[f64]) -> Vec<f64> {
        self.p.kron_mul_vec(x, self.dim)
    }

    pub fn w_mul(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; self.w_rows.len() * n];
        for (i, row) in self.w_rows.iter().enumerate() {
            for &(l, coef) in row {
                for c in 0..n {
                    out[i * n + c] += coef * u[l * n + c];
                }
            }
        }
        out
    }

    /// `W u + c`, the right-hand side of the stationarity system.
    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.w_mul(u);
        for (a, b) in r.iter_mut().zip(&self.anchor_force) {
            *a += b;
        }
        r
    }

    /// Solves `P z = rhs`.
    pub fn spd_solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve_kron(rhs, self.dim)
    }

    /// `xᵀPx − 2(Wu + c)ᵀx + 2sᵀu`, without the anchor constant.
    pub fn objective_matrix_form(&self, x: &[f64], u: &[f64]) -> f64 {
        let px = self.p_mul(x);
        let r = self.rhs(u);
        dot(x, &px) - 2.0 * dot(&r, x) + 2.0 * dot(&self.s, u)
    }

    /// Matrix form plus the anchor constant; equals the edge-sum objective.
    pub fn objective(&self, x: &[f64], u: &[f64]) -> f64 {
        self.objective_matrix_form(x, u) + self.anchor_const
    }

    /// `∇_x G = 2 (P x − W u − c)`.
    pub fn gradient_x(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let px = self.p_mul(x);
        let r = self.rhs(u);
        px.iter().zip(&r).map(|(a, b)| 2.0 * (a - b)).collect()
    }
}

/// Rows of the reduced incidence matrices `Q̃` (sensor-sensor) and `Ã`
/// (sensor-anchor) in dense form. Test and diagnostic use only.
pub fn dense_incidence(net: &Network) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = net.n_sensors();
    let q = net
        .sensor_edges()
        .iter()
        .map(|e| {
            let mut row = vec![0.0; n];
            row[e.i] = 1.0;
            row[e.j] = -1.0;
            row
        })
        .collect();
    let a = net
        .anchor_edges()
        .iter()
        .map(|e| {
            let mut row = vec![0.0; n];
            row[e.sensor] = 1.0;
            row
        })
        .collect();
    (q, a)
}

/// Components of the sensor-only graph (sensor-sensor edges).
pub fn sensor_components(net: &Network) -> usize {
    let n = net.n_sensors();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for inc in net.neighbors(v) {
                if let Node::Sensor(w) = inc.peer {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
    }
    count
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
