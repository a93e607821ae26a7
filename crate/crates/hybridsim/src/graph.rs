//! Undirected weighted graphs with positive integer weights, plus the
//! centralized distance routines the simulation results are checked against.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub type NodeId = u32;
pub type Weight = u64;

/// Sentinel for "unreachable". All arithmetic on distances must go through
/// [`add_w`] so the sentinel is absorbing.
pub const INF: Weight = u64::MAX;

/// Adds two distances, treating [`INF`] as absorbing.
#[inline]
pub fn add_w(a: Weight, b: Weight) -> Weight {
    if a == INF || b == INF {
        INF
    } else {
        a.checked_add(b).expect("distance overflow")
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    EndpointOutOfRange(NodeId, NodeId, u32),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(NodeId, NodeId),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Undirected graph on nodes `0..n` with integer edge weights in `[1, W]`.
/// Each edge is stored once in `edges` and mirrored in both adjacency lists.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: u32,
    edges: Vec<(NodeId, NodeId, Weight)>,
    adj: Vec<Vec<(NodeId, Weight)>>,
}

impl WeightedGraph {
    pub fn new(n: u32, edges: Vec<(NodeId, NodeId, Weight)>) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n as usize];
        let mut seen = std::collections::HashSet::new();
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(GraphError::EndpointOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if w == 0 {
                return Err(GraphError::ZeroWeight(u, v));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }
        Ok(Self { n, edges, adj })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId, Weight)] {
        &self.edges
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, Weight)] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u as usize].iter().any(|&(x, _)| x == v)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n as usize];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Serializes as a header line `n m` followed by one `u v w` line per edge.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(u, v, w) in &self.edges {
            let _ = writeln!(out, "{u} {v} {w}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_file_string()).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, GraphError> {
        let err = |line: usize, msg: String| GraphError::Parse {
            path: path.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (lno, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header line".into()))?;
        let mut parts = header.split_whitespace();
        let n: u32 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(lno, "header must be `n m`".into()))?;
        let m: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(lno, "header must be `n m`".into()))?;
        if parts.next().is_some() {
            return Err(err(lno, "header must be `n m`".into()));
        }
        let mut edges = Vec::with_capacity(m);
        for (lno, line) in lines {
            let mut parts = line.split_whitespace();
            let mut field = |name: &str| -> Result<u64, GraphError> {
                parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lno, format!("expected {name} in `u v w` line")))
            };
            let u = field("u")?;
            let v = field("v")?;
            let w = field("w")?;
            if parts.next().is_some() {
                return Err(err(lno, "trailing tokens after `u v w`".into()));
            }
            edges.push((u as NodeId, v as NodeId, w));
        }
        if edges.len() != m {
            return Err(err(
                1,
                format!("header announces {m} edges, found {}", edges.len()),
            ));
        }
        Self::new(n, edges).map_err(|e| err(0, e.to_string()))
    }
}

/// Single-source shortest path distances via a binary heap.
pub fn dijkstra(g: &WeightedGraph, s: NodeId) -> Vec<Weight> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut dist = vec![INF; g.n() as usize];
    let mut heap = BinaryHeap::new();
    dist[s as usize] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Weight of a shortest path among those using at most `h` edges, per node.
/// Plain Bellman-Ford layering: after round `t` the vector holds the best
/// distance over paths of at most `t` hops.
pub fn hop_limited_distances(g: &WeightedGraph, s: NodeId, h: u32) -> Vec<Weight> {
    let mut dist = vec![INF; g.n() as usize];
    dist[s as usize] = 0;
    for _ in 0..h {
        let prev = dist.clone();
        for &(u, v, w) in g.edges() {
            let du = add_w(prev[u as usize], w);
            if du < dist[v as usize] {
                dist[v as usize] = du;
            }
            let dv = add_w(prev[v as usize], w);
            if dv < dist[u as usize] {
                dist[u as usize] = dv;
            }
        }
    }
    dist
}

/// Hop distances (edge counts) from `s`, by breadth-first search.
pub fn hop_distances(g: &WeightedGraph, s: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n() as usize];
    let mut queue = std::collections::VecDeque::new();
    dist[s as usize] = 0;
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = dist[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact eccentricity of every node. Errors on disconnected inputs because
/// eccentricities are infinite there.
pub fn brute_eccentricities(g: &WeightedGraph) -> Result<Vec<Weight>, GraphError> {
    let mut ecc = Vec::with_capacity(g.n() as usize);
    for s in 0..g.n() {
        let dist = dijkstra(g, s);
        let max = dist.iter().copied().max().unwrap_or(0);
        if max == INF {
            return Err(GraphError::Disconnected);
        }
        ecc.push(max);
    }
    Ok(ecc)
}

/// Exact diameter, the maximum eccentricity.
pub fn brute_diameter(g: &WeightedGraph) -> Result<Weight, GraphError> {
    Ok(brute_eccentricities(g)?.into_iter().max().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    /// Independent check for dijkstra: iterate edge relaxations to fixpoint.
    fn bellman_ford(g: &WeightedGraph, s: NodeId) -> Vec<Weight> {
        let mut dist = vec![INF; g.n() as usize];
        dist[s as usize] = 0;
        loop {
            let mut changed = false;
            for &(u, v, w) in g.edges() {
                let du = add_w(dist[u as usize], w);
                if du < dist[v as usize] {
                    dist[v as usize] = du;
                    changed = true;
                }
                let dv = add_w(dist[v as usize], w);
                if dv < dist[u as usize] {
                    dist[u as usize] = dv;
                    changed = true;
                }
            }
            if !changed {
                return dist;
            }
        }
    }

    /// Independent check for hop-limited distances: Dijkstra on the layered
    /// product graph over states (node, hops used).
    fn product_graph_hop_limited(g: &WeightedGraph, s: NodeId, h: u32) -> Vec<Weight> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let n = g.n() as usize;
        let hh = h as usize + 1;
        let mut dist = vec![INF; n * hh];
        let mut heap = BinaryHeap::new();
        dist[s as usize * hh] = 0;
        heap.push(Reverse((0u64, s, 0u32)));
        while let Some(Reverse((d, u, k))) = heap.pop() {
            if d > dist[u as usize * hh + k as usize] {
                continue;
            }
            if k == h {
                continue;
            }
            for &(v, w) in g.neighbors(u) {
                let nd = d + w;
                let slot = v as usize * hh + k as usize + 1;
                if nd < dist[slot] {
                    dist[slot] = nd;
                    heap.push(Reverse((nd, v, k + 1)));
                }
            }
        }
        (0..n)
            .map(|v| (0..hh).map(|k| dist[v * hh + k]).min().unwrap())
            .collect()
    }

    fn weighted_path(weights: &[Weight]) -> WeightedGraph {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as NodeId, i as NodeId + 1, w))
            .collect();
        WeightedGraph::new(weights.len() as u32 + 1, edges).unwrap()
    }

    #[test]
    fn dijkstra_on_fixed_path() {
        let g = weighted_path(&[2, 3, 7]);
        assert_eq!(dijkstra(&g, 0), vec![0, 2, 5, 12]);
        assert_eq!(dijkstra(&g, 2), vec![5, 3, 0, 7]);
    }

    #[test]
    fn dijkstra_prefers_light_detour() {
        // Triangle where the two-edge route undercuts the direct edge.
        let g = WeightedGraph::new(3, vec![(0, 1, 10), (0, 2, 3), (2, 1, 4)]).unwrap();
        assert_eq!(dijkstra(&g, 0), vec![0, 7, 3]);
    }

    #[test]
    fn dijkstra_matches_bellman_ford_on_random_graphs() {
        for seed in 0..6 {
            let g = gen::erdos_renyi(60, 0.08, 1, 50, seed).unwrap();
            for s in [0, 17, 59] {
                assert_eq!(dijkstra(&g, s), bellman_ford(&g, s), "seed {seed}");
            }
        }
    }

    #[test]
    fn hop_limit_trades_weight_for_hops() {
        // Direct heavy edge vs a light three-hop route.
        let g = WeightedGraph::new(
            4,
            vec![(0, 3, 10), (0, 1, 1), (1, 2, 1), (2, 3, 1)],
        )
        .unwrap();
        assert_eq!(hop_limited_distances(&g, 0, 1)[3], 10);
        assert_eq!(hop_limited_distances(&g, 0, 2)[3], 10);
        assert_eq!(hop_limited_distances(&g, 0, 3)[3], 3);
    }

    #[test]
    fn hop_limited_matches_product_graph_oracle() {
        for seed in 0..4 {
            let g = gen::erdos_renyi(40, 0.1, 1, 30, 100 + seed).unwrap();
            for h in [0, 1, 3, 7, 39] {
                assert_eq!(
                    hop_limited_distances(&g, 5, h),
                    product_graph_hop_limited(&g, 5, h),
                    "seed {seed} h {h}"
                );
            }
        }
    }

    #[test]
    fn hop_limited_is_monotone_and_converges_to_dijkstra() {
        let g = gen::erdos_renyi(50, 0.09, 1, 40, 42).unwrap();
        let full = dijkstra(&g, 3);
        let mut prev = hop_limited_distances(&g, 3, 0);
        for h in 1..g.n() {
            let cur = hop_limited_distances(&g, 3, h);
            for v in 0..g.n() as usize {
                assert!(cur[v] <= prev[v]);
                assert!(cur[v] >= full[v]);
            }
            prev = cur;
        }
        assert_eq!(prev, full);
    }

    #[test]
    fn eccentricities_on_unit_path() {
        let g = weighted_path(&[1, 1, 1]);
        assert_eq!(brute_eccentricities(&g).unwrap(), vec![3, 2, 2, 3]);
        assert_eq!(brute_diameter(&g).unwrap(), 3);
    }

    #[test]
    fn eccentricity_rejects_disconnected() {
        let g = WeightedGraph::new(4, vec![(0, 1, 1), (2, 3, 1)]).unwrap();
        assert!(matches!(
            brute_eccentricities(&g),
            Err(GraphError::Disconnected)
        ));
    }

    #[test]
    fn constructor_rejects_bad_edges() {
        assert!(matches!(
            WeightedGraph::new(3, vec![(0, 3, 1)]),
            Err(GraphError::EndpointOutOfRange(..))
        ));
        assert!(matches!(
            WeightedGraph::new(3, vec![(1, 1, 1)]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(matches!(
            WeightedGraph::new(3, vec![(0, 1, 1), (1, 0, 2)]),
            Err(GraphError::DuplicateEdge(..))
        ));
        assert!(matches!(
            WeightedGraph::new(3, vec![(0, 1, 0)]),
            Err(GraphError::ZeroWeight(..))
        ));
    }

    #[test]
    fn file_roundtrip_preserves_graph() {
        let g = gen::erdos_renyi(30, 0.15, 1, 9, 7).unwrap();
        let text = g.to_file_string();
        let back = WeightedGraph::parse(&text, "mem").unwrap();
        assert_eq!(back.n(), g.n());
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "3 2\n0 1 5\n0 2\n";
        match WeightedGraph::parse(text, "bad.graph") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
