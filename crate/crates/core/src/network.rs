//! Network data model: anchors, sensors, and measured edges.
//!
//! Sensors are indexed `0..N` and anchors `0..m` in separate index spaces.
//! Sensor-sensor edges are stored once with `i < j`; the reverse orientation
//! is implied. Edges are ordered sensor-sensor first (lexicographic), then
//! sensor-anchor (lexicographic); that order indexes the auxiliary vector `u`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A vertex of the union graph over sensors and anchors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Sensor(usize),
    Anchor(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorEdge {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorEdge {
    pub sensor: usize,
    pub anchor: usize,
    pub dist: f64,
}

/// One end of an edge as seen from a sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incidence {
    /// Global edge index (row of the stacked incidence matrix).
    pub edge: usize,
    pub peer: Node,
    /// `+1` when the sensor is the first endpoint of the stored orientation,
    /// `-1` otherwise; `u_ji = -u_ij`.
    pub sign: f64,
}

/// Edge order and reverse lookup.
#[derive(Clone, Debug, Default)]
pub struct EdgeOrdering {
    edges: Vec<(usize, Node)>,
    lookup: HashMap<(usize, Node), usize>,
}

impl EdgeOrdering {
    fn new(sensor_edges: &[SensorEdge], anchor_edges: &[AnchorEdge]) -> Self {
        let edges: Vec<(usize, Node)> = sensor_edges
            .iter()
            .map(|e| (e.i, Node::Sensor(e.j)))
            .chain(anchor_edges.iter().map(|e| (e.sensor, Node::Anchor(e.anchor))))
            .collect();
        let lookup = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        Self { edges, lookup }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, index: usize) -> (usize, Node) {
        self.edges[index]
    }

    /// Index of the edge between `a` and `b`, in either orientation.
    pub fn index_of(&self, a: Node, b: Node) -> Option<usize> {
        let key = match (a, b) {
            (Node::Sensor(i), Node::Sensor(j)) => (i.min(j), Node::Sensor(i.max(j))),
            (Node::Sensor(i), Node::Anchor(k)) | (Node::Anchor(k), Node::Sensor(i)) => (i, Node::Anchor(k)),
            _ => return None,
        };
        self.lookup.get(&key).copied()
    }
}

/// Unvalidated network description. [`Network::new`] validates and freezes it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkParts {
    pub dim: usize,
    pub n_sensors: usize,
    /// Anchor coordinates, `m * dim` values.
    pub anchors: Vec<f64>,
    /// Ground-truth sensor coordinates, `n_sensors * dim` values.
    pub truth: Option<Vec<f64>>,
    /// `(i, j, d_ij)` between sensors, either orientation.
    pub sensor_edges: Vec<(usize, usize, f64)>,
    /// `(sensor, anchor, d)`.
    pub anchor_edges: Vec<(usize, usize, f64)>,
    pub radius: f64,
}

impl NetworkParts {
    pub fn n_anchors(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.anchors.len() / self.dim
        }
    }

    /// Connected components of the union graph over sensors and anchors.
    /// Components are ordered by their smallest node (sensors before anchors).
    pub fn components(&self) -> Vec<Vec<Node>> {
        let n = self.n_sensors;
        let m = self.n_anchors();
        let mut adj = vec![Vec::new(); n + m];
        for &(i, j, _) in &self.sensor_edges {
            if i < n && j < n {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for &(i, k, _) in &self.anchor_edges {
            if i < n && k < m {
                adj[i].push(n + k);
                adj[n + k].push(i);
            }
        }
        let to_node = |v: usize| if v < n { Node::Sensor(v) } else { Node::Anchor(v - n) };
        let mut seen = vec![false; n + m];
        let mut out = Vec::new();
        for s in 0..n + m {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![];
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                comp.push(to_node(v));
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

/// Immutable, validated localization instance.
#[derive(Clone, Debug)]
pub struct Network {
    dim: usize,
    n_sensors: usize,
    anchors: Vec<f64>,
    truth: Option<Vec<f64>>,
    sensor_edges: Vec<SensorEdge>,
    anchor_edges: Vec<AnchorEdge>,
    radius: f64,
    ordering: EdgeOrdering,
    incidence: Vec<Vec<Incidence>>,
}

impl Network {
    /// Validates `parts`: `dim >= 1`, at least one anchor, indices in range,
    /// no duplicate or self edges, all distances positive and finite, and a
    /// connected union graph.
    pub fn new(parts: NetworkParts) -> Result<Self> {
        let NetworkParts { dim, n_sensors, anchors, truth, sensor_edges, anchor_edges, radius } = parts;
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if anchors.len() % dim != 0 || anchors.iter().any(|v| !v.is_finite()) {
            return Err(invalid("anchor coordinates malformed"));
        }
        let m = anchors.len() / dim;
        if m == 0 {
            return Err(invalid("at least one anchor is required"));
        }
        if n_sensors == 0 {
            return Err(invalid("at least one sensor is required"));
        }
        if let Some(t) = &truth {
            if t.len() != n_sensors * dim || t.iter().any(|v| !v.is_finite()) {
                return Err(invalid("ground truth has wrong length"));
            }
        }
        let check_dist = |d: f64| {
            if d > 0.0 && d.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("distance {d} is not positive")))
            }
        };

        let mut se = Vec::with_capacity(sensor_edges.len());
        for &(a, b, d) in &sensor_edges {
            if a >= n_sensors || b >= n_sensors || a == b {
                return Err(invalid(format!("bad sensor edge ({a}, {b})")));
            }
            check_dist(d)?;
            se.push(SensorEdge { i: a.min(b), j: a.max(b), dist: d });
        }
        se.sort_by_key(|e| (e.i, e.j));
        if se.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(invalid("duplicate sensor edge"));
        }

        let mut ae = Vec::with_capacity(anchor_edges.len());
        for &(s, k, d) in &anchor_edges {
            if s >= n_sensors || k >= m {
                return Err(invalid(format!("bad anchor edge ({s}, {k})")));
            }
            check_dist(d)?;
            ae.push(AnchorEdge { sensor: s, anchor: k, dist: d });
        }
        ae.sort_by_key(|e| (e.sensor, e.anchor));
        if ae.windows(2).any(|w| (w[0].sensor, w[0].anchor) == (w[1].sensor, w[1].anchor)) {
            return Err(invalid("duplicate anchor edge"));
        }

        let parts = NetworkParts {
            dim,
            n_sensors,
            anchors,
            truth,
            sensor_edges: se.iter().map(|e| (e.i, e.j, e.dist)).collect(),
            anchor_edges: ae.iter().map(|e| (e.sensor, e.anchor, e.dist)).collect(),
            radius,
        };
        let components = parts.components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }

        let ordering = EdgeOrdering::new(&se, &ae);
        let mut incidence = vec![Vec::new(); n_sensors];
        for (k, e) in se.iter().enumerate() {
            incidence[e.i].push(Incidence { edge: k, peer: Node::Sensor(e.j), sign: 1.0 });
            incidence[e.j].push(Incidence { edge: k, peer: Node::Sensor(e.i), sign: -1.0 });
        }
        let offset = se.len();
        for (k, e) in ae.iter().enumerate() {
            incidence[e.sensor].push(Incidence { edge: offset + k, peer: Node::Anchor(e.anchor), sign: 1.0 });
        }
        for list in &mut incidence {
            list.sort_by_key(|inc| inc.peer);
        }

        Ok(Self {
            dim,
            n_sensors,
            anchors: parts.anchors,
            truth: parts.truth,
            sensor_edges: se,
            anchor_edges: ae,
            radius,
            ordering,
            incidence,
        })
    }

    /// Same topology with new distances, given in edge order.
    pub fn with_distances(&self, dists: &[f64]) -> Result<Self> {
        if dists.len() != self.n_edges() {
            return Err(invalid("distance vector has wrong length"));
        }
        if let Some(d) = dists.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(invalid(format!("distance {d} is not positive")));
        }
        let mut out = self.clone();
        let k1 = self.sensor_edges.len();
        for (e, &d) in out.sensor_edges.iter_mut().zip(&dists[..k1]) {
            e.dist = d;
        }
        for (e, &d) in out.anchor_edges.iter_mut().zip(&dists[k1..]) {
            e.dist = d;
        }
        Ok(out)
    }

    pub fn with_truth(&self, truth: Option<Vec<f64>>) -> Result<Self> {
        if let Some(t) = &truth {
            if t.len() != self.n_sensors * self.dim {
                return Err(invalid("ground truth has wrong length"));
            }
        }
        let mut out = self.clone();
        out.truth = truth;
        Ok(out)
    }

    pub fn parts(&self) -> NetworkParts {
        NetworkParts {
            dim: self.dim,
            n_sensors: self.n_sensors,
            anchors: self.anchors.clone(),
            truth: self.truth.clone(),
            sensor_edges: self.sensor_edges.iter().map(|e| (e.i, e.j, e.dist)).collect(),
            anchor_edges: self.anchor_edges.iter().map(|e| (e.sensor, e.anchor, e.dist)).collect(),
            radius: self.radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len() / self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn anchor(&self, k: usize) -> &[f64] {
        &self.anchors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn truth(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    pub fn sensor_edges(&self) -> &[SensorEdge] {
        &self.sensor_edges
    }

    pub fn anchor_edges(&self) -> &[AnchorEdge] {
        &self.anchor_edges
    }

    pub fn n_edges(&self) -> usize {
        self.sensor_edges.len() + self.anchor_edges.len()
    }

    pub fn ordering(&self) -> &EdgeOrdering {
        &self.ordering
    }

    /// Distance of the edge at global index `edge`.
    pub fn dist(&self, edge: usize) -> f64 {
        let k1 = self.sensor_edges.len();
        if edge < k1 {
            self.sensor_edges[edge].dist
        } else {
            self.anchor_edges[edge - k1].dist
        }
    }

    /// All distances in edge order.
    pub fn distances(&self) -> Vec<f64> {
        self.sensor_edges
            .iter()
            .map(|e| e.dist)
            .chain(self.anchor_edges.iter().map(|e| e.dist))
            .collect()
    }

    /// Distances between ground-truth positions, in edge order.
    pub fn true_distances(&self) -> Result<Vec<f64>> {
        let t = self.truth().ok_or(Error::MissingTruth)?;
        let n = self.dim;
        let sensor = |i: usize| &t[i * n..(i + 1) * n];
        Ok(self
            .sensor_edges
            .iter()
            .map(|e| norm_diff(sensor(e.i), sensor(e.j)))
            .chain(self.anchor_edges.iter().map(|e| norm_diff(sensor(e.sensor), self.anchor(e.anchor))))
            .collect())
    }

    /// Edges incident to sensor `i`, sensor peers first (ascending), then anchors.
    pub fn neighbors(&self, i: usize) -> &[Incidence] {
        &self.incidence[i]
    }

    /// `M_i`: number of neighbors of sensor `i`, anchors included.
    pub fn degree(&self, i: usize) -> usize {
        self.incidence[i].len()
    }

    /// Number of sensor neighbors of sensor `i`.
    pub fn sensor_degree(&self, i: usize) -> usize {
        self.incidence[i].iter().filter(|inc| matches!(inc.peer, Node::Sensor(_))).count()
    }

    /// `d_max`: maximal sensor-sensor degree over all sensors.
    pub fn max_sensor_degree(&self) -> usize {
        (0..self.n_sensors).map(|i| self.sensor_degree(i)).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        (0..self.n_sensors).map(|i| self.degree(i)).sum::<usize>() as f64 / self.n_sensors as f64
    }

    pub fn anchor_degree(&self, k: usize) -> usize {
        self.anchor_edges.iter().filter(|e| e.anchor == k).count()
    }

    pub fn components(&self) -> Vec<Vec<Node>> {
        self.parts().components()
    }

    /// True when `other` has the same dimension, sizes, and edge set.
    pub fn same_topology(&self, other: &Network) -> bool {
        self.dim == other.dim
            && self.n_sensors == other.n_sensors
            && self.anchors.len() == other.anchors.len()
            && self.sensor_edges.len() == other.sensor_edges.len()
            && self.anchor_edges.len() == other.anchor_edges.len()
            && self.sensor_edges.iter().zip(&other.sensor_edges).all(|(a, b)| (a.i, a.j) == (b.i, b.j))
            && self
                .anchor_edges
                .iter()
                .zip(&other.anchor_edges)
                .all(|(a, b)| (a.sensor, a.anchor) == (b.sensor, b.anchor))
    }

    /// Residual vector of an edge at positions `x`: `x_i - x_j` or `x_i - a_k`.
    pub fn edge_vector(&self, edge: usize, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let k1 = self.sensor_edges.len();
        if edge < k1 {
            let e = self.sensor_edges[edge];
            for c in 0..n {
                out[c] = x[e.i * n + c] - x[e.j * n + c];
            }
        } else {
            let e = self.anchor_edges[edge - k1];
            let a = self.anchor(e.anchor);
            for c in 0..n {
                out[c] = x[e.sensor * n + c] - a[c];
            }
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
