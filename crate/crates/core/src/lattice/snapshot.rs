//! Cluster snapshot files.
//!
//! ```text
//! # phl cluster snapshot v1
//! d 2
//! L 64
//! law bernoulli 0.7          (or: law conductance 4)
//! seed 42
//! kind myopic
//! edges 1234
//! 130 131 1
//! 131 131 1                  (self-weight lines repeat the vertex id)
//! ```
//!
//! Vertex ids are row-major site ids in the box, first coordinate slowest.
//! Each undirected edge appears once with `x_id < y_id`; weights use the
//! shortest representation that round-trips.

use std::io::{BufRead, Write};

use super::config::{BoxGeometry, Site};
use super::graph::{AntKind, WeightedGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SNAPSHOT_MAGIC: &str = "# phl cluster snapshot v1";

#[derive(Clone, Debug, PartialEq)]
pub enum SnapshotLaw {
    Bernoulli(f64),
    Conductance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub side: usize,
    pub law: SnapshotLaw,
    pub seed: u64,
    pub kind: AntKind,
}

pub fn write_snapshot<S: Scalar, W: Write>(
    graph: &WeightedGraph<S>,
    header: &SnapshotHeader,
    mut out: W,
) -> Result<()> {
    let geom = graph.geometry();
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(out, "d {}", header.dim)?;
    writeln!(out, "L {}", header.side)?;
    match header.law {
        SnapshotLaw::Bernoulli(p) => writeln!(out, "law bernoulli {p}")?,
        SnapshotLaw::Conductance(k) => writeln!(out, "law conductance {k}")?,
    }
    writeln!(out, "seed {}", header.seed)?;
    writeln!(out, "kind {}", header.kind.name())?;
    let self_lines = (0..graph.len()).filter(|&v| graph.self_weight(v) > S::zero()).count();
    writeln!(out, "edges {}", graph.edges().count() + self_lines)?;
    for x in 0..graph.len() {
        let xid = geom.site_id(&graph.site(x));
        let sw = graph.self_weight(x);
        if sw > S::zero() {
            writeln!(out, "{xid} {xid} {}", sw.to_f64_lossy())?;
        }
        for (y, w) in graph.neighbors(x) {
            if y > x {
                let yid = geom.site_id(&graph.site(y));
                writeln!(out, "{xid} {yid} {}", w.to_f64_lossy())?;
            }
        }
    }
    Ok(())
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` header line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Parse(format!("expected `{key}` header, found `{line}`")))
}

fn parse<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Parse(format!("bad {what}: `{text}`")))
}

pub fn read_snapshot<S: Scalar, R: BufRead>(input: R) -> Result<(SnapshotHeader, WeightedGraph<S>)> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty());
    if it.next() != Some(SNAPSHOT_MAGIC) {
        return Err(Error::Parse("missing snapshot magic line".into()));
    }
    let dim: usize = parse(header_value(it.next(), "d")?, "dimension")?;
    let side: usize = parse(header_value(it.next(), "L")?, "side")?;
    let law_text = header_value(it.next(), "law")?;
    let law = match law_text.split_once(' ') {
        Some(("bernoulli", p)) => SnapshotLaw::Bernoulli(parse(p, "p")?),
        Some(("conductance", k)) => SnapshotLaw::Conductance(parse(k, "K")?),
        _ => return Err(Error::Parse(format!("bad law `{law_text}`"))),
    };
    let seed: u64 = parse(header_value(it.next(), "seed")?, "seed")?;
    let kind: AntKind = header_value(it.next(), "kind")?.parse()?;
    let count: usize = parse(header_value(it.next(), "edges")?, "edge count")?;
    let geometry = BoxGeometry::new(dim, side)?;
    let mut sites: Vec<Site> = Vec::new();
    let mut edges = Vec::new();
    let mut self_weights = Vec::new();
    let to_site = |id: usize| -> Result<Site> {
        if id >= geometry.num_sites() {
            return Err(Error::Parse(format!("vertex id {id} outside the box")));
        }
        Ok(geometry.site(id))
    };
    let mut seen = 0;
    for line in it {
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), Some(w), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Parse(format!("bad edge line `{line}`")));
        };
        let (a, b): (usize, usize) = (parse(a, "vertex id")?, parse(b, "vertex id")?);
        let w = S::from_f64_lossy(parse::<f64>(w, "weight")?);
        let (sa, sb) = (to_site(a)?, to_site(b)?);
        sites.push(sa);
        sites.push(sb);
        if a == b {
            self_weights.push((sa, w));
        } else {
            edges.push((sa, sb, w));
        }
        seen += 1;
    }
    if seen != count {
        return Err(Error::Parse(format!("header announces {count} edges, found {seen}")));
    }
    let graph = WeightedGraph::from_parts(geometry, kind, sites, &edges, &self_weights)?;
    Ok((SnapshotHeader { dim, side, law, seed, kind }, graph))
}
