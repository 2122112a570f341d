#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use wsnloc::netgen::{generate_connected, sample_noise, GenSpec};
use wsnloc::network::Network;
use wsnloc::rng::Stream;

/// Connected random instance with one noisy realization.
pub fn instance(seed: u64, k: usize, m: usize, r: f64, sigma: f64) -> Network {
    let spec = GenSpec::new(k, m, r, sigma).with_seed(seed);
    let (net, _) = generate_connected(&spec, 500).expect("connected draw");
    sample_noise(&net, sigma, seed, 0).unwrap().net
}

/// Small instance with `K` in `[12, 50]`.
pub fn small_instance(seed: u64) -> Network {
    let mut s = Stream::new(seed, 99, 0);
    let k = 12 + s.index(39);
    let m = 3 + s.index(3);
    instance(seed, k, m, 0.45, 0.01)
}

pub fn uniform_vec(s: &mut Stream, len: usize, half: f64) -> Vec<f64> {
    (0..len).map(|_| s.uniform_in(-half, half)).collect()
}

/// Random vectors in the unit ball, one per edge.
pub fn ball_vec(s: &mut Stream, edges: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(edges * n);
    for _ in 0..edges {
        let v: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let radius = s.uniform();
        out.extend(v.iter().map(|a| a / len * radius));
    }
    out
}

pub fn to_dense(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

pub fn kron_identity(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    a.kronecker(&DMatrix::identity(n, n))
}

/// Dense `P`, `W`, `c = -AᵀBa`, `s`, and the constant `Σ_{E2} ‖a‖²`, assembled
/// from the incidence matrices.
pub struct Dense {
    pub p: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub c: DVector<f64>,
    pub s: DVector<f64>,
    pub kappa: f64,
}

pub fn dense_system(net: &Network) -> Dense {
    let n = net.dim();
    let big_n = net.n_sensors();
    let e1 = net.sensor_edges().len();
    let e2 = net.anchor_edges().len();
    let mut q_t = DMatrix::zeros(e1, big_n);
    for (l, e) in net.sensor_edges().iter().enumerate() {
        q_t[(l, e.i)] = 1.0;
        q_t[(l, e.j)] = -1.0;
    }
    let mut a_t = DMatrix::zeros(e2, big_n);
    for (l, e) in net.anchor_edges().iter().enumerate() {
        a_t[(l, e.sensor)] = 1.0;
    }
    let q = kron_identity(&q_t, n);
    let a = kron_identity(&a_t, n);
    let mut b_t = DMatrix::zeros(e2, net.n_anchors());
    for (l, e) in net.anchor_edges().iter().enumerate() {
        b_t[(l, e.anchor)] = -1.0;
    }
    let b = kron_identity(&b_t, n);
    let dists = DVector::from_iterator(e1 + e2, (0..e1 + e2).map(|l| net.dist(l)));
    let d = kron_identity(&DMatrix::from_diagonal(&dists), n);
    let p = q.transpose() * &q + a.transpose() * &a;
    let mut stacked_t = DMatrix::zeros(big_n * n, (e1 + e2) * n);
    stacked_t.view_mut((0, 0), (big_n * n, e1 * n)).copy_from(&q.transpose());
    stacked_t.view_mut((0, e1 * n), (big_n * n, e2 * n)).copy_from(&a.transpose());
    let w = stacked_t * &d;
    let av = DVector::from_column_slice(net.anchors());
    let c = -(a.transpose() * &b * &av);
    // anchor edges contribute +2 d uᵀa to G
    let mut s = DVector::zeros((e1 + e2) * n);
    for (l, e) in net.anchor_edges().iter().enumerate() {
        for k in 0..n {
            s[(e1 + l) * n + k] = net.dist(e1 + l) * net.anchor(e.anchor)[k];
        }
    }
    let kappa = net.anchor_edges().iter().map(|e| net.anchor(e.anchor).iter().map(|v| v * v).sum::<f64>()).sum();
    Dense { p, w, c, s, kappa }
}

/// Dense `G(x, u)` in matrix form.
pub fn dense_objective(sys: &Dense, x: &[f64], u: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x);
    let u = DVector::from_column_slice(u);
    (x.transpose() * &sys.p * &x)[(0, 0)] - 2.0 * (&sys.w * &u + &sys.c).dot(&x) + 2.0 * sys.s.dot(&u) + sys.kappa
}

/// Dense minimizer of `G(·, u)`.
pub fn dense_x_update(sys: &Dense, u: &[f64]) -> Vec<f64> {
    let rhs = &sys.w * DVector::from_column_slice(u) + &sys.c;
    let chol = sys.p.clone().cholesky().expect("P is positive definite");
    chol.solve(&rhs).as_slice().to_vec()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Hand-built planar network without ground truth.
pub fn hand_net(n_sensors: usize, anchors: &[f64], sensor_edges: &[(usize, usize, f64)], anchor_edges: &[(usize, usize, f64)]) -> Network {
    Network::new(wsnloc::NetworkParts {
        dim: 2,
        n_sensors,
        anchors: anchors.to_vec(),
        truth: None,
        sensor_edges: sensor_edges.to_vec(),
        anchor_edges: anchor_edges.to_vec(),
        radius: 1.0,
    })
    .unwrap()
}

/// One Gauss-Seidel pass over `clusters` by dense block solves, then the
/// closed-form `u` step; independent of the library's block machinery.
pub fn dense_sweep(net: &Network, sys: &Dense, clusters: &[Vec<usize>], x: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = net.dim();
    let rhs = &sys.w * DVector::from_column_slice(u) + &sys.c;
    let mut x = DVector::from_column_slice(x);
    for cluster in clusters {
        let idx: Vec<usize> = cluster.iter().flat_map(|&i| (0..n).map(move |c| i * n + c)).collect();
        let k = idx.len();
        let p_cc = DMatrix::from_fn(k, k, |a, b| sys.p[(idx[a], idx[b])]);
        let mut b = DVector::from_fn(k, |a, _| rhs[idx[a]]);
        for a in 0..k {
            for col in 0..x.len() {
                if !idx.contains(&col) {
                    b[a] -= sys.p[(idx[a], col)] * x[col];
                }
            }
        }
        let z = p_cc.cholesky().expect("principal block is SPD").solve(&b);
        for a in 0..k {
            x[idx[a]] = z[a];
        }
    }
    let x = x.as_slice().to_vec();
    let mut u_new = vec![0.0; net.n_edges() * n];
    let mut v = vec![0.0; n];
    for e in 0..net.n_edges() {
        net.edge_vector(e, &x, &mut v);
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 0.0 {
            for c in 0..n {
                u_new[e * n + c] = v[c] / len;
            }
        }
    }
    (x, u_new)
}
