//! Graph families and Laplacian assembly.
//!
//! All edges carry unit jump rate. Builders return graphs whose edge list is
//! sorted ascending with `i < j` in every pair.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

/// Default upper bound on node count for builders driven by a spec string.
pub const DEFAULT_SIZE_CAP: usize = 5000;

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    connected: bool,
}

impl Graph {
    /// Builds a graph from an arbitrary edge collection. Pairs are normalised
    /// to `i < j`, sorted and deduplicated; self-loops and out-of-range nodes
    /// are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { index: a.max(b), n });
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let connected = count_components(n, &edges) == 1;
        Ok(Graph {
            n,
            edges,
            connected,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn components(&self) -> usize {
        count_components(self.n, &self.edges)
    }

    /// Edge-list text: `n <count>` followed by one ascending `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "empty edge list"))?;
        let n = header
            .trim()
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::parse(0, "expected header line `n <count>`"))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(Error::parse(lineno, format!("bad edge line `{line}`"))),
            }
        }
        Graph::from_edges(n, edges)
    }
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

/// Cycle on `n >= 3` nodes; node `i` is joined to `i ± 1 mod n`.
pub fn build_ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Star with core node 0 and `n - 1` leaves.
pub fn build_star(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("star needs n >= 3, got {n}")));
    }
    Graph::from_edges(n, (1..n).map(|i| (0, i)))
}

/// Node count of a dendrimer, without building it.
pub fn dendrimer_size(generation: u32, z: usize) -> u128 {
    let z = z as u128;
    let mut total = 1u128;
    let mut shell = 1u128;
    for g in 1..=generation {
        shell = shell.saturating_mul(if g == 1 { z } else { z - 1 });
        total = total.saturating_add(shell);
    }
    total
}

/// Dendrimer (Cayley tree) of the given generation and functionality `z`.
///
/// The core has `z` neighbours, every later shell node has `z - 1` children.
/// Nodes are numbered breadth-first from the core, children in creation
/// order, so shell `g` occupies a contiguous index range.
pub fn build_dendrimer(generation: u32, z: usize) -> Result<Graph> {
    if z < 3 {
        return Err(Error::InvalidFunctionality(z));
    }
    let size = dendrimer_size(generation, z);
    if size > usize::MAX as u128 / 2 {
        return Err(Error::ResourceLimit {
            nodes: size,
            cap: usize::MAX / 2,
        });
    }
    let mut edges = Vec::with_capacity(size as usize - 1);
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for g in 1..=generation {
        let children = if g == 1 { z } else { z - 1 };
        let mut next = Vec::with_capacity(frontier.len() * children);
        for &parent in &frontier {
            for _ in 0..children {
                edges.push((parent, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Graph::from_edges(next_id, edges)
}

/// Periodic `d`-dimensional lattice (torus) with `side` nodes per axis.
/// Node index is `Σ_k x_k side^k`. Uses [`DEFAULT_SIZE_CAP`].
pub fn build_hypercubic(side: usize, d: usize) -> Result<Graph> {
    build_hypercubic_capped(side, d, DEFAULT_SIZE_CAP)
}

pub fn build_hypercubic_capped(side: usize, d: usize, cap: usize) -> Result<Graph> {
    if side < 3 {
        return Err(Error::InvalidSize(format!(
            "torus needs side >= 3, got {side}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidSize("torus needs d >= 1".into()));
    }
    let nodes = (side as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if nodes > cap as u128 {
        return Err(Error::ResourceLimit { nodes, cap });
    }
    let n = nodes as usize;
    let mut edges = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut stride = 1;
        for _ in 0..d {
            let coord = (i / stride) % side;
            let j = i - coord * stride + ((coord + 1) % side) * stride;
            edges.push((i, j));
            stride *= side;
        }
    }
    Graph::from_edges(n, edges)
}

/// Uniform variate in `[0, 1)` from the top 53 bits of the next ChaCha8 word.
fn next_unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// G(n, p) random graph.
///
/// The generator is ChaCha8 seeded via `seed_from_u64(seed)`; pairs `(i, j)`,
/// `i < j`, are visited in lexicographic order and each consumes exactly one
/// 64-bit output `w`, included when `(w >> 11) · 2⁻⁵³ < p`. The stream is
/// platform independent, so identical `(n, p, seed)` give identical graphs.
/// The result may be disconnected; see [`Graph::is_connected`].
pub fn build_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidSize("G(n, p) needs n >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if next_unit(&mut rng) < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Dense graph Laplacian `D - A`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    n: usize,
    data: Vec<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn laplacian(g: &Graph) -> Laplacian {
    let n = g.n;
    let mut data = vec![0.0; n * n];
    for &(a, b) in &g.edges {
        data[a * n + a] += 1.0;
        data[b * n + b] += 1.0;
        data[a * n + b] = -1.0;
        data[b * n + a] = -1.0;
    }
    Laplacian { n, data }
}

/// Parsed `--graph` specification, e.g. `ring:200`, `star:10`,
/// `dendrimer:10,3`, `torus:200,1`, `er:1000,0.1,seed=1`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Ring(usize),
    Star(usize),
    Dendrimer { generation: u32, z: usize },
    Torus { side: usize, d: usize },
    ErdosRenyi { n: usize, p: f64, seed: Option<u64> },
}

impl GraphSpec {
    /// Node count the spec will produce.
    pub fn node_count(&self) -> u128 {
        match *self {
            GraphSpec::Ring(n) | GraphSpec::Star(n) => n as u128,
            GraphSpec::Dendrimer { generation, z } => dendrimer_size(generation, z.max(3)),
            GraphSpec::Torus { side, d } => {
                (side as u128).checked_pow(d as u32).unwrap_or(u128::MAX)
            }
            GraphSpec::ErdosRenyi { n, .. } => n as u128,
        }
    }

    /// Builds the graph, rejecting anything above `cap` nodes. `default_seed`
    /// is used for random families whose spec carries no seed.
    pub fn build(&self, default_seed: u64, cap: usize) -> Result<Graph> {
        let nodes = self.node_count();
        if nodes > cap as u128 {
            return Err(Error::ResourceLimit { nodes, cap });
        }
        match *self {
            GraphSpec::Ring(n) => build_ring(n),
            GraphSpec::Star(n) => build_star(n),
            GraphSpec::Dendrimer { generation, z } => build_dendrimer(generation, z),
            GraphSpec::Torus { side, d } => build_hypercubic_capped(side, d, cap),
            GraphSpec::ErdosRenyi { n, p, seed } => {
                build_erdos_renyi(n, p, seed.unwrap_or(default_seed))
            }
        }
    }
}

/// Splits `family:a,b,...` into the family name and `(offset, token)` params.
pub(crate) fn split_spec(s: &str) -> Result<(&str, Vec<(usize, &str)>)> {
    let (family, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::parse(s.len(), format!("expected `<family>:<params>` in `{s}`")))?;
    let mut params = Vec::new();
    let mut offset = family.len() + 1;
    for tok in rest.split(',') {
        params.push((offset, tok.trim()));
        offset += tok.len() + 1;
    }
    Ok((family.trim(), params))
}

pub(crate) fn parse_num<T: FromStr>(offset: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(offset, format!("invalid {what} `{tok}`")))
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = split_spec(s)?;
        let expect = |count: usize| -> Result<()> {
            if params.len() == count {
                Ok(())
            } else {
                Err(Error::parse(
                    family.len() + 1,
                    format!(
                        "`{family}` takes {count} parameter(s), got {}",
                        params.len()
                    ),
                ))
            }
        };
        match family {
            "ring" => {
                expect(1)?;
                Ok(GraphSpec::Ring(parse_num(
                    params[0].0,
                    params[0].1,
                    "node count",
                )?))
            }
            "star" => {
                expect(1)?;
                Ok(GraphSpec::Star(parse_num(
                    params[0].0,
                    params[0].1,
                    "node count",
                )?))
            }
            "dendrimer" | "cayley" => {
                expect(2)?;
                Ok(GraphSpec::Dendrimer {
                    generation: parse_num(params[0].0, params[0].1, "generation")?,
                    z: parse_num(params[1].0, params[1].1, "functionality")?,
                })
            }
            "torus" | "hypercubic" | "lattice" => {
                expect(2)?;
                Ok(GraphSpec::Torus {
                    side: parse_num(params[0].0, params[0].1, "side")?,
                    d: parse_num(params[1].0, params[1].1, "dimension")?,
                })
            }
            "er" | "gnp" => {
                if params.len() != 2 && params.len() != 3 {
                    return Err(Error::parse(
                        family.len() + 1,
                        "`er` takes n,p[,seed=<int>]",
                    ));
                }
                let seed = match params.get(2) {
                    None => None,
                    Some(&(off, tok)) => {
                        let value = tok.strip_prefix("seed=").unwrap_or(tok);
                        Some(parse_num(off, value, "seed")?)
                    }
                };
                Ok(GraphSpec::ErdosRenyi {
                    n: parse_num(params[0].0, params[0].1, "node count")?,
                    p: parse_num(params[1].0, params[1].1, "probability")?,
                    seed,
                })
            }
            other => Err(Error::parse(0, format!("unknown graph family `{other}`"))),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Ring(n) => write!(f, "ring:{n}"),
            GraphSpec::Star(n) => write!(f, "star:{n}"),
            GraphSpec::Dendrimer { generation, z } => write!(f, "dendrimer:{generation},{z}"),
            GraphSpec::Torus { side, d } => write!(f, "torus:{side},{d}"),
            GraphSpec::ErdosRenyi {
                n,
                p,
                seed: Some(s),
            } => write!(f, "er:{n},{p},seed={s}"),
            GraphSpec::ErdosRenyi { n, p, seed: None } => write!(f, "er:{n},{p}"),
        }
    }
}
