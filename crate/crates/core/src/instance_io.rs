//! Plain-text instance files.
//!
//! ```text
//! # comment
//! [meta]
//! n 2
//! K 4
//! m 1
//! r 0.5
//! sigma 0.01
//! [anchors]
//! 4 0.1 0.2
//! [sensors]          # optional ground truth
//! 1 0.0 0.0
//! [edges]
//! 1 2 0.25           # i < j; j > N refers to an anchor
//! [clusters]         # optional
//! kind colored
//! 1 0
//! ```
//!
//! Node ids are 1-based: sensors `1..=N`, anchors `N+1..=K` with `N = K - m`.
//! Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::clustering::{ClusterKind, Clustering};
use crate::error::{Error, Result};
use crate::network::{Network, NetworkParts};

/// Everything an instance file can carry.
#[derive(Clone, Debug)]
pub struct InstanceFile {
    pub network: Network,
    pub sigma: f64,
    pub clustering: Option<Clustering>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Network> {
    Ok(read_instance_file(path)?.network)
}

pub fn read_instance_file(path: impl AsRef<Path>) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

pub fn write_instance(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    write_instance_file(net, 0.0, None, path)
}

pub fn write_instance_file(net: &Network, sigma: f64, clustering: Option<&Clustering>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_instance(net, sigma, clustering))?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_instance(net: &Network, sigma: f64, clustering: Option<&Clustering>) -> String {
    let n = net.dim();
    let big_n = net.n_sensors();
    let mut out = String::new();
    let _ = writeln!(out, "[meta]");
    let _ = writeln!(out, "n {n}");
    let _ = writeln!(out, "K {}", big_n + net.n_anchors());
    let _ = writeln!(out, "m {}", net.n_anchors());
    let _ = writeln!(out, "r {}", num(net.radius()));
    let _ = writeln!(out, "sigma {}", num(sigma));
    let _ = writeln!(out, "[anchors]");
    for k in 0..net.n_anchors() {
        let coords: Vec<String> = net.anchor(k).iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{} {}", big_n + k + 1, coords.join(" "));
    }
    if let Some(t) = net.truth() {
        let _ = writeln!(out, "[sensors]");
        for i in 0..big_n {
            let coords: Vec<String> = t[i * n..(i + 1) * n].iter().map(|&v| num(v)).collect();
            let _ = writeln!(out, "{} {}", i + 1, coords.join(" "));
        }
    }
    let _ = writeln!(out, "[edges]");
    for e in net.sensor_edges() {
        let _ = writeln!(out, "{} {} {}", e.i + 1, e.j + 1, num(e.dist));
    }
    for e in net.anchor_edges() {
        let _ = writeln!(out, "{} {} {}", e.sensor + 1, big_n + e.anchor + 1, num(e.dist));
    }
    if let Some(c) = clustering {
        let _ = writeln!(out, "[clusters]");
        let _ = writeln!(out, "kind {}", c.kind().name());
        for (i, cid) in c.assignment().iter().enumerate() {
            let _ = writeln!(out, "{} {}", i + 1, cid);
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Meta,
    Anchors,
    Sensors,
    Edges,
    Clusters,
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let mut section = Section::None;
    let mut seen = std::collections::HashSet::new();
    let (mut dim, mut k, mut m, mut r, mut sigma) = (None, None, None, None, 0.0);
    let mut anchors: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut sensors: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut edges: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut cluster_kind = None;
    let mut clusters: Vec<(usize, usize, usize)> = Vec::new();
    let mut last_line = 0;

    let parse_f = |ln: usize, s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| perr(ln, format!("{what}: expected a number, got '{s}'")))
    };
    let parse_u = |ln: usize, s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| perr(ln, format!("{what}: expected an integer, got '{s}'")))
    };

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        last_line = ln;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[meta]" => Section::Meta,
                "[anchors]" => Section::Anchors,
                "[sensors]" => Section::Sensors,
                "[edges]" => Section::Edges,
                "[clusters]" => Section::Clusters,
                other => return Err(perr(ln, format!("unknown section {other}"))),
            };
            if !seen.insert(line.to_string()) {
                return Err(perr(ln, format!("duplicate section {line}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::None => return Err(perr(ln, "data before any section")),
            Section::Meta => {
                if fields.len() != 2 {
                    return Err(perr(ln, "meta lines are 'key value'"));
                }
                match fields[0] {
                    "n" => dim = Some(parse_u(ln, fields[1], "n")?),
                    "K" => k = Some(parse_u(ln, fields[1], "K")?),
                    "m" => m = Some(parse_u(ln, fields[1], "m")?),
                    "r" => r = Some(parse_f(ln, fields[1], "r")?),
                    "sigma" => sigma = parse_f(ln, fields[1], "sigma")?,
                    other => return Err(perr(ln, format!("unknown meta key '{other}'"))),
                }
            }
            Section::Anchors | Section::Sensors => {
                if fields.len() < 2 {
                    return Err(perr(ln, "expected 'id x1 .. xn'"));
                }
                let id = parse_u(ln, fields[0], "id")?;
                let coords = fields[1..].iter().map(|s| parse_f(ln, s, "coordinate")).collect::<Result<Vec<_>>>()?;
                if section == Section::Anchors {
                    anchors.push((ln, id, coords));
                } else {
                    sensors.push((ln, id, coords));
                }
            }
            Section::Edges => {
                if fields.len() != 3 {
                    return Err(perr(ln, "expected 'i j d_ij'"));
                }
                edges.push((ln, parse_u(ln, fields[0], "i")?, parse_u(ln, fields[1], "j")?, parse_f(ln, fields[2], "d_ij")?));
            }
            Section::Clusters => {
                if fields.len() != 2 {
                    return Err(perr(ln, "expected 'id cluster' or 'kind <name>'"));
                }
                if fields[0] == "kind" {
                    cluster_kind = Some(ClusterKind::from_name(fields[1]).ok_or_else(|| perr(ln, "unknown cluster kind"))?);
                } else {
                    clusters.push((ln, parse_u(ln, fields[0], "id")?, parse_u(ln, fields[1], "cluster")?));
                }
            }
        }
    }

    let eof = last_line + 1;
    if !seen.contains("[meta]") {
        return Err(perr(eof, "missing [meta] section"));
    }
    if !seen.contains("[anchors]") {
        return Err(perr(eof, "missing [anchors] section"));
    }
    if !seen.contains("[edges]") {
        return Err(perr(eof, "missing [edges] section"));
    }
    let dim = dim.ok_or_else(|| perr(eof, "meta: missing n"))?;
    let k = k.ok_or_else(|| perr(eof, "meta: missing K"))?;
    let m = m.ok_or_else(|| perr(eof, "meta: missing m"))?;
    let r = r.ok_or_else(|| perr(eof, "meta: missing r"))?;
    if m == 0 || m >= k || dim == 0 {
        return Err(perr(eof, "meta: need n >= 1 and 1 <= m < K"));
    }
    let big_n = k - m;

    let mut anchor_xy = vec![None; m];
    for (ln, id, coords) in anchors {
        if id <= big_n || id > k {
            return Err(perr(ln, format!("anchor id {id} outside {}..={k}", big_n + 1)));
        }
        if coords.len() != dim {
            return Err(perr(ln, format!("expected {dim} coordinates")));
        }
        if anchor_xy[id - big_n - 1].replace(coords).is_some() {
            return Err(perr(ln, format!("duplicate anchor {id}")));
        }
    }
    if anchor_xy.iter().any(Option::is_none) {
        return Err(perr(eof, "[anchors] does not list every anchor"));
    }
    let anchor_vec: Vec<f64> = anchor_xy.into_iter().flatten().flatten().collect();

    let truth = if seen.contains("[sensors]") {
        let mut xy = vec![None; big_n];
        for (ln, id, coords) in sensors {
            if id == 0 || id > big_n {
                return Err(perr(ln, format!("sensor id {id} outside 1..={big_n}")));
            }
            if coords.len() != dim {
                return Err(perr(ln, format!("expected {dim} coordinates")));
            }
            if xy[id - 1].replace(coords).is_some() {
                return Err(perr(ln, format!("duplicate sensor {id}")));
            }
        }
        if xy.iter().any(Option::is_none) {
            return Err(perr(eof, "[sensors] does not list every sensor"));
        }
        Some(xy.into_iter().flatten().flatten().collect())
    } else {
        None
    };

    let mut sensor_edges = Vec::new();
    let mut anchor_edges = Vec::new();
    for (ln, i, j, d) in edges {
        let (i, j) = (i.min(j), i.max(j));
        if i == 0 || j > k || i > big_n {
            return Err(perr(ln, format!("edge ({i}, {j}) must join a sensor to a sensor or anchor")));
        }
        if j <= big_n {
            sensor_edges.push((i - 1, j - 1, d));
        } else {
            anchor_edges.push((i - 1, j - big_n - 1, d));
        }
    }

    let network = Network::new(NetworkParts {
        dim,
        n_sensors: big_n,
        anchors: anchor_vec,
        truth,
        sensor_edges,
        anchor_edges,
        radius: r,
    })?;

    let clustering = if seen.contains("[clusters]") {
        let kind = cluster_kind.ok_or_else(|| perr(eof, "[clusters] needs a 'kind' line"))?;
        let mut assignment = vec![None; big_n];
        for (ln, id, c) in clusters {
            if id == 0 || id > big_n {
                return Err(perr(ln, format!("sensor id {id} outside 1..={big_n}")));
            }
            if assignment[id - 1].replace(c).is_some() {
                return Err(perr(ln, format!("sensor {id} assigned twice")));
            }
        }
        let assignment: Option<Vec<usize>> = assignment.into_iter().collect();
        let assignment = assignment.ok_or_else(|| perr(eof, "[clusters] does not cover every sensor"))?;
        Some(Clustering::from_assignment(&network, kind, &assignment)?)
    } else {
        None
    };

    Ok(InstanceFile { network, sigma, clustering })
}
