//! The national occupation space.
//!
//! Occupations are linked by proximity: the minimum of the two conditional
//! probabilities that a city advantaged in one occupation is also advantaged
//! in the other. The network skeleton is a maximum spanning tree over
//! proximity (per connected component), complemented with every link above
//! a proximity threshold. Closeness centrality on the resulting unweighted
//! network locates each occupation between core and periphery, and city
//! overlays place cities by the mean centrality of their advantaged set.

mod export;

pub use export::{
    edgelist_string, export_network, graphml_string, json_string, nodes_csv_string, ExportFormat,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metrics::RcaMatrix;

#[derive(Debug, Error)]
pub enum OccSpaceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown city '{0}'")]
    UnknownCity(String),
    #[error("city '{0}' has no advantaged occupations")]
    NoAdvantagedOccupations(String),
}

pub type Result<T> = std::result::Result<T, OccSpaceError>;

/// Symmetric occupation-by-occupation proximity, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    occupations: Vec<String>,
    values: Vec<f64>,
}

impl ProximityMatrix {
    pub fn from_parts(occupations: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), occupations.len() * occupations.len());
        ProximityMatrix { occupations, values }
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.occupations.len() + j]
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }
}

/// Pairwise conditional co-advantage probability, taking the smaller of the
/// two directions. `C_i` is the set of cities with RCA at or above
/// `advantage_cutoff` for occupation `i`; `phi(i,j) = |C_i ∩ C_j| /
/// max(|C_i|, |C_j|)`, and 0 when either set is empty.
#[allow(clippy::needless_range_loop)]
pub fn proximity(rca: &RcaMatrix, advantage_cutoff: f64) -> ProximityMatrix {
    let n_occ = rca.occupations().len();
    let n_cities = rca.cities().len();
    let mut advantage: Vec<Vec<bool>> = vec![vec![false; n_cities]; n_occ];
    let mut set_size = vec![0usize; n_occ];
    for i in 0..n_cities {
        for j in 0..n_occ {
            if rca.value(i, j) >= advantage_cutoff {
                advantage[j][i] = true;
                set_size[j] += 1;
            }
        }
    }
    let mut values = vec![0.0; n_occ * n_occ];
    for a in 0..n_occ {
        if set_size[a] == 0 {
            continue;
        }
        for b in (a + 1)..n_occ {
            if set_size[b] == 0 {
                continue;
            }
            let overlap = advantage[a]
                .iter()
                .zip(&advantage[b])
                .filter(|(x, y)| **x && **y)
                .count();
            let phi = overlap as f64 / set_size[a].max(set_size[b]) as f64;
            values[a * n_occ + b] = phi;
            values[b * n_occ + a] = phi;
        }
    }
    ProximityMatrix {
        occupations: rca.occupations().to_vec(),
        values,
    }
}

/// Origin of a network edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    /// Part of the maximum spanning forest skeleton.
    Mst,
    /// Added because its proximity exceeds the threshold.
    Threshold,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Mst => "mst",
            EdgeTag::Threshold => "threshold",
        }
    }
}

/// Undirected weighted edge between two node indices, `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub tag: EdgeTag,
}

/// Weighted undirected occupation network: MST skeleton plus threshold links.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationNetwork {
    nodes: Vec<String>,
    edges: Vec<NetworkEdge>,
}

impl OccupationNetwork {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[NetworkEdge] {
        &self.edges
    }

    pub fn node_position(&self, code: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == code)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        adj
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Builds the occupation network: a maximum spanning forest over the
/// positive-proximity graph (Kruskal, deterministic tie-breaking on the
/// lexicographically smaller code pair), complemented with every non-MST
/// pair whose proximity strictly exceeds `threshold`.
pub fn build_network(prox: &ProximityMatrix, threshold: f64) -> OccupationNetwork {
    let n = prox.len();
    let code_pair = |a: usize, b: usize| -> (&str, &str) {
        let (x, y) = (&prox.occupations[a], &prox.occupations[b]);
        if x <= y {
            (x.as_str(), y.as_str())
        } else {
            (y.as_str(), x.as_str())
        }
    };

    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let w = prox.value(a, b);
            if w > 0.0 {
                candidates.push((a, b, w));
            }
        }
    }
    candidates.sort_by(|&(a1, b1, w1), &(a2, b2, w2)| {
        w2.partial_cmp(&w1)
            .unwrap()
            .then_with(|| code_pair(a1, b1).cmp(&code_pair(a2, b2)))
    });

    let mut uf = UnionFind::new(n);
    let mut edges: Vec<NetworkEdge> = Vec::new();
    let mut in_mst = vec![false; candidates.len()];
    for (idx, &(a, b, w)) in candidates.iter().enumerate() {
        if uf.union(a, b) {
            in_mst[idx] = true;
            edges.push(NetworkEdge {
                a,
                b,
                weight: w,
                tag: EdgeTag::Mst,
            });
        }
    }
    for (idx, &(a, b, w)) in candidates.iter().enumerate() {
        if !in_mst[idx] && w > threshold {
            edges.push(NetworkEdge {
                a,
                b,
                weight: w,
                tag: EdgeTag::Threshold,
            });
        }
    }
    // Canonical edge order: by code pair, independent of build order.
    edges.sort_by(|e1, e2| code_pair(e1.a, e1.b).cmp(&code_pair(e2.a, e2.b)));
    OccupationNetwork {
        nodes: prox.occupations.clone(),
        edges,
    }
}

/// Closeness centrality on the unweighted network, normalized so that a
/// node reaching its whole component in one hop scores by component size:
/// `c(v) = ((r-1)/(n-1)) * ((r-1) / sum of BFS distances)` with `r` the
/// number of nodes reachable from `v` (including `v`). Isolated nodes
/// score 0.
pub fn closeness(net: &OccupationNetwork) -> BTreeMap<String, f64> {
    let n = net.nodes.len();
    let adj = net.adjacency();
    let mut out = BTreeMap::new();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for v in 0..n {
        dist.fill(usize::MAX);
        dist[v] = 0;
        queue.clear();
        queue.push_back(v);
        let mut reachable = 1usize;
        let mut total = 0usize;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    reachable += 1;
                    total += dist[w];
                    queue.push_back(w);
                }
            }
        }
        let score = if reachable <= 1 || n <= 1 {
            0.0
        } else {
            let r = (reachable - 1) as f64;
            (r / (n - 1) as f64) * (r / total as f64)
        };
        out.insert(net.nodes[v].clone(), score);
    }
    out
}

/// A city's footprint in the occupation space.
#[derive(Debug, Clone, PartialEq)]
pub struct CityOverlay {
    pub city: String,
    /// Occupations where the city's RCA reaches the advantage cutoff.
    pub advantaged: Vec<String>,
    /// Mean closeness centrality over the advantaged set.
    pub position: f64,
}

/// Places a city in the occupation space by its advantaged occupations.
pub fn overlay(
    net: &OccupationNetwork,
    rca: &RcaMatrix,
    closeness_map: &BTreeMap<String, f64>,
    city: &str,
    advantage_cutoff: f64,
) -> Result<CityOverlay> {
    let row = rca
        .city_position(city)
        .ok_or_else(|| OccSpaceError::UnknownCity(city.to_string()))?;
    let mut advantaged = Vec::new();
    let mut sum = 0.0;
    for (j, code) in rca.occupations().iter().enumerate() {
        if rca.value(row, j) >= advantage_cutoff && net.node_position(code).is_some() {
            sum += closeness_map.get(code).copied().unwrap_or(0.0);
            advantaged.push(code.clone());
        }
    }
    if advantaged.is_empty() {
        return Err(OccSpaceError::NoAdvantagedOccupations(city.to_string()));
    }
    let position = sum / advantaged.len() as f64;
    Ok(CityOverlay {
        city: city.to_string(),
        advantaged,
        position,
    })
}
