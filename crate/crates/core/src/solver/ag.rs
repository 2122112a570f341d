//! Accelerated gradient warm start on `x` with `u` held fixed.

use crate::matrices::ProblemMatrices;
use crate::network::Network;

/// Upper bound on the Lipschitz constant of `∇_x G`: `2 (2 d_max + m)`, with
/// `d_max` the largest sensor-sensor degree and `m` the anchor count.
pub fn lipschitz_bound(net: &Network) -> f64 {
    lipschitz_constant(net.max_sensor_degree(), net.n_anchors())
}

/// `2 (2 d_max + m)`.
pub fn lipschitz_constant(d_max: usize, m: usize) -> f64 {
    2.0 * (2.0 * d_max as f64 + m as f64)
}

/// Runs `iters` Nesterov steps of size `1/L` on `G(·, u0)` from `x0`.
pub fn ag_warmstart(net: &Network, mats: &ProblemMatrices, u0: &[f64], x0: &[f64], iters: usize) -> Vec<f64> {
    ag_warmstart_observed(net, mats, u0, x0, iters, &mut |_, _| {})
}

/// [`ag_warmstart`], calling `observer(k, x_k)` after iteration `k = 1..=iters`.
pub fn ag_warmstart_observed(
    net: &Network,
    mats: &ProblemMatrices,
    u0: &[f64],
    x0: &[f64],
    iters: usize,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Vec<f64> {
    let step = 1.0 / lipschitz_bound(net);
    let mut x = x0.to_vec();
    let mut x_prev = x0.to_vec();
    let mut y = vec![0.0; x.len()];
    let (mut t_prev, mut t) = (1.0f64, 1.0f64);
    for k in 1..=iters {
        let beta = (t_prev - 1.0) / t;
        for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(&x_prev) {
            *yi = xi + beta * (xi - pi);
        }
        let g = mats.gradient_x(&y, u0);
        std::mem::swap(&mut x_prev, &mut x);
        for ((xi, yi), gi) in x.iter_mut().zip(&y).zip(&g) {
            *xi = yi - step * gi;
        }
        t_prev = t;
        t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        observer(k, &x);
    }
    x
}
