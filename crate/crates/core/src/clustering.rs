//! Partitions of the sensors into update blocks.
//!
//! * `whole`: one block, the centralized method.
//! * `singleton`: one block per sensor, the fully distributed method.
//! * `geographical`: LEACH-like; random cluster heads, each sensor joins the
//!   head with the fewest sensor-sensor hops.
//! * `colored`: greedy graph coloring; no two neighbours share a block, so
//!   every block can be updated in parallel.
//!
//! Anchors never belong to a cluster.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{Network, Node};
use crate::rng::{tag, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterKind {
    Whole,
    Singleton,
    Geographical,
    Colored,
}

impl ClusterKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Whole => "whole",
            Self::Singleton => "singleton",
            Self::Geographical => "geographical",
            Self::Colored => "colored",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "whole" => Self::Whole,
            "singleton" => Self::Singleton,
            "geographical" => Self::Geographical,
            "colored" => Self::Colored,
            _ => return None,
        })
    }
}

/// A partition of `0..N` into ordered clusters. Clusters are processed in
/// index order; sensors inside a cluster are kept ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    kind: ClusterKind,
    clusters: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    heads: Option<Vec<usize>>,
}

impl Clustering {
    pub fn whole(n_sensors: usize) -> Self {
        Self::from_clusters(ClusterKind::Whole, vec![(0..n_sensors).collect()], None)
    }

    pub fn singleton(n_sensors: usize) -> Self {
        Self::from_clusters(ClusterKind::Singleton, (0..n_sensors).map(|i| vec![i]).collect(), None)
    }

    fn from_clusters(kind: ClusterKind, mut clusters: Vec<Vec<usize>>, heads: Option<Vec<usize>>) -> Self {
        let n: usize = clusters.iter().map(Vec::len).sum();
        let mut assignment = vec![0; n];
        for (c, members) in clusters.iter_mut().enumerate() {
            members.sort_unstable();
            for &i in members.iter() {
                assignment[i] = c;
            }
        }
        Self { kind, clusters, assignment, heads }
    }

    /// Rebuilds a clustering from per-sensor cluster ids, validating the
    /// partition and the kind's invariants.
    pub fn from_assignment(net: &Network, kind: ClusterKind, assignment: &[usize]) -> Result<Self> {
        if assignment.len() != net.n_sensors() {
            return Err(invalid("assignment must cover every sensor"));
        }
        let q = assignment.iter().max().map_or(0, |&c| c + 1);
        let mut clusters = vec![Vec::new(); q];
        for (i, &c) in assignment.iter().enumerate() {
            clusters[c].push(i);
        }
        if clusters.iter().any(Vec::is_empty) {
            return Err(invalid("cluster ids must be contiguous from 0"));
        }
        let c = Self::from_clusters(kind, clusters, None);
        c.validate(net)?;
        Ok(c)
    }

    /// LEACH-like clustering: `q` heads drawn uniformly without replacement;
    /// each sensor joins the head at minimal sensor-sensor hop distance, ties
    /// broken by the smallest sum of measured distances along a shortest-hop
    /// path, then by the lowest head index. Clusters are ordered by head index.
    pub fn geographical(net: &Network, q: usize, seed: u64) -> Result<Self> {
        let n = net.n_sensors();
        if q == 0 || q > n {
            return Err(invalid(format!("need 1 <= q <= N, got q = {q}")));
        }
        let mut stream = Stream::new(seed, tag::CLUSTER_HEADS, q as u64);
        let heads = stream.sample_without_replacement(n, q);
        Self::with_heads(net, &heads)
    }

    /// Hop-distance assignment to the given cluster heads (see [`Clustering::geographical`]).
    pub fn with_heads(net: &Network, heads: &[usize]) -> Result<Self> {
        let n = net.n_sensors();
        let mut heads = heads.to_vec();
        heads.sort_unstable();
        heads.dedup();
        if heads.is_empty() || heads.iter().any(|&h| h >= n) {
            return Err(invalid("cluster heads must be distinct sensors"));
        }
        let q = heads.len();

        // best[i] = (hops, path length, head position)
        let mut best: Vec<Option<(usize, f64, usize)>> = vec![None; n];
        let mut hops = vec![usize::MAX; n];
        let mut length = vec![f64::INFINITY; n];
        let mut touched = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for (h, &head) in heads.iter().enumerate() {
            for &v in &touched {
                hops[v] = usize::MAX;
                length[v] = f64::INFINITY;
            }
            touched.clear();
            hops[head] = 0;
            length[head] = 0.0;
            touched.push(head);
            queue.push_back(head);
            while let Some(v) = queue.pop_front() {
                for inc in net.neighbors(v) {
                    let Node::Sensor(w) = inc.peer else { continue };
                    let cand = length[v] + net.dist(inc.edge);
                    if hops[w] == usize::MAX {
                        hops[w] = hops[v] + 1;
                        length[w] = cand;
                        touched.push(w);
                        queue.push_back(w);
                    } else if hops[w] == hops[v] + 1 && cand < length[w] {
                        length[w] = cand;
                    }
                }
            }
            for &v in &touched {
                let key = (hops[v], length[v], h);
                let better = match best[v] {
                    None => true,
                    Some(b) => key.0 < b.0 || (key.0 == b.0 && key.1 < b.1),
                };
                if better {
                    best[v] = Some(key);
                }
            }
        }

        let mut clusters = vec![Vec::new(); q];
        for (i, b) in best.iter().enumerate() {
            match b {
                Some((_, _, h)) => clusters[*h].push(i),
                None => return Err(Error::Unreachable { sensor: i }),
            }
        }
        let kind = if q == 1 {
            ClusterKind::Whole
        } else if q == n {
            ClusterKind::Singleton
        } else {
            ClusterKind::Geographical
        };
        Ok(Self::from_clusters(kind, clusters, Some(heads)))
    }

    /// Greedy sequential coloring of the sensor-sensor graph: sensors are
    /// visited by descending degree (ties by index) and take the smallest
    /// color not used by an already colored neighbour. Color classes become
    /// the clusters, in color order.
    pub fn colored(net: &Network) -> Self {
        let n = net.n_sensors();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(net.sensor_degree(i)), i));
        let mut color = vec![usize::MAX; n];
        let mut used = Vec::new();
        for &v in &order {
            used.clear();
            for inc in net.neighbors(v) {
                if let Node::Sensor(w) = inc.peer {
                    if color[w] != usize::MAX {
                        used.push(color[w]);
                    }
                }
            }
            used.sort_unstable();
            used.dedup();
            let mut c = 0;
            for &u in &used {
                if u == c {
                    c += 1;
                } else if u > c {
                    break;
                }
            }
            color[v] = c;
        }
        let q = color.iter().max().map_or(0, |&c| c + 1);
        let mut clusters = vec![Vec::new(); q];
        for (i, &c) in color.iter().enumerate() {
            clusters[c].push(i);
        }
        Self::from_clusters(ClusterKind::Colored, clusters, None)
    }

    pub fn kind(&self) -> ClusterKind {
        self.kind
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster id per sensor.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn heads(&self) -> Option<&[usize]> {
        self.heads.as_deref()
    }

    /// True when no sensor-sensor edge joins two members of the same cluster.
    pub fn is_independent(&self, net: &Network) -> bool {
        net.sensor_edges().iter().all(|e| self.assignment[e.i] != self.assignment[e.j])
    }

    /// Checks the partition property and the kind-specific invariants.
    pub fn validate(&self, net: &Network) -> Result<()> {
        let n = net.n_sensors();
        let mut seen = vec![false; n];
        for members in &self.clusters {
            if members.is_empty() {
                return Err(invalid("empty cluster"));
            }
            for &i in members {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(invalid(format!("sensor {i} out of range or in two clusters")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("clusters do not cover every sensor"));
        }
        let q = self.clusters.len();
        match self.kind {
            ClusterKind::Whole if q != 1 => Err(invalid("whole clustering must have one cluster")),
            ClusterKind::Singleton if q != n => Err(invalid("singleton clustering must have N clusters")),
            ClusterKind::Colored if !self.is_independent(net) => Err(invalid("colored cluster contains an edge")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkParts;

    fn path(n: usize) -> Network {
        let se = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        Network::new(NetworkParts {
            dim: 2,
            n_sensors: n,
            anchors: vec![0.0, 0.0],
            truth: None,
            sensor_edges: se,
            anchor_edges: vec![(n - 1, 0, 1.0)],
            radius: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn path_two_coloring() {
        let c = Clustering::colored(&path(3));
        assert_eq!(c.clusters(), &[vec![1], vec![0, 2]]);
        assert!(c.is_independent(&path(3)));
    }

    #[test]
    fn triangle_needs_three_colors() {
        let net = Network::new(NetworkParts {
            dim: 2,
            n_sensors: 3,
            anchors: vec![0.0, 0.0],
            truth: None,
            sensor_edges: vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)],
            anchor_edges: vec![(0, 0, 1.0)],
            radius: 1.0,
        })
        .unwrap();
        assert_eq!(Clustering::colored(&net).len(), 3);
    }

    #[test]
    fn path_hop_assignment() {
        // heads 1 and 4 (1-based): sensor 3 is 2 hops from 1, 1 hop from 4
        let c = Clustering::with_heads(&path(5), &[0, 3]).unwrap();
        assert_eq!(c.clusters(), &[vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(c.kind(), ClusterKind::Geographical);
    }

    #[test]
    fn hop_ties_use_measured_length() {
        // 0 - 1 - 2 with heads 0 and 2: sensor 1 is one hop from both and
        // joins the head behind the shorter edge.
        let net = Network::new(NetworkParts {
            dim: 2,
            n_sensors: 3,
            anchors: vec![0.0, 0.0],
            truth: None,
            sensor_edges: vec![(0, 1, 0.9), (1, 2, 0.4)],
            anchor_edges: vec![(0, 0, 1.0)],
            radius: 1.0,
        })
        .unwrap();
        let c = Clustering::with_heads(&net, &[0, 2]).unwrap();
        assert_eq!(c.clusters(), &[vec![0], vec![1, 2]]);
        let even = net.with_distances(&[0.5, 0.5, 1.0]).unwrap();
        let c = Clustering::with_heads(&even, &[0, 2]).unwrap();
        assert_eq!(c.clusters(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn degenerate_geographical_partitions() {
        let net = path(5);
        let all = Clustering::geographical(&net, 5, 1).unwrap();
        assert_eq!(all.kind(), ClusterKind::Singleton);
        assert!(all.clusters().iter().all(|c| c.len() == 1));
        let one = Clustering::geographical(&net, 1, 1).unwrap();
        assert_eq!(one.clusters(), &[vec![0, 1, 2, 3, 4]]);
        assert!(Clustering::geographical(&net, 0, 1).is_err());
        assert!(Clustering::geographical(&net, 6, 1).is_err());
    }

    #[test]
    fn from_assignment_validates() {
        let net = path(3);
        assert!(Clustering::from_assignment(&net, ClusterKind::Colored, &[0, 1, 0]).is_ok());
        assert!(Clustering::from_assignment(&net, ClusterKind::Colored, &[0, 0, 1]).is_err());
        assert!(Clustering::from_assignment(&net, ClusterKind::Whole, &[0, 1, 0]).is_err());
        assert!(Clustering::from_assignment(&net, ClusterKind::Geographical, &[0, 2, 0]).is_err());
    }

    #[test]
    fn unreachable_sensor_is_reported() {
        // sensors 0-1 and 2 only joined through the anchor
        let net = Network::new(NetworkParts {
            dim: 2,
            n_sensors: 3,
            anchors: vec![0.0, 0.0],
            truth: None,
            sensor_edges: vec![(0, 1, 1.0)],
            anchor_edges: vec![(1, 0, 1.0), (2, 0, 1.0)],
            radius: 1.0,
        })
        .unwrap();
        let mut hit = false;
        for seed in 0..20 {
            if let Err(Error::Unreachable { .. }) = Clustering::geographical(&net, 1, seed) {
                hit = true;
            }
        }
        assert!(hit);
    }
}
