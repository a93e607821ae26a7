//! Graph generators. Every generator is deterministic in its seed, and the
//! random families redraw (with a derived seed) until the instance is
//! connected, giving up after a bounded number of attempts.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::derive_seed;
use crate::graph::{GraphError, NodeId, Weight, WeightedGraph};

/// Redraw budget for the random families before giving up on connectivity.
const MAX_REDRAWS: u32 = 50;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("no connected instance found after {MAX_REDRAWS} redraws (n={n})")]
    CouldNotConnect { n: u32 },
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn weight_rng(rng: &mut ChaCha8Rng, wmin: Weight, wmax: Weight) -> Weight {
    if wmin == wmax {
        wmin
    } else {
        rng.gen_range(wmin..=wmax)
    }
}

fn check_weight_range(wmin: Weight, wmax: Weight) -> Result<(), GenError> {
    if wmin == 0 || wmin > wmax {
        return Err(GenError::BadParams(format!(
            "weight range [{wmin}, {wmax}] must satisfy 1 <= wmin <= wmax"
        )));
    }
    Ok(())
}

/// Path on `n` nodes, edges `(i, i+1)`.
pub fn path(n: u32, wmin: Weight, wmax: Weight, seed: u64) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-path", 0));
    let edges = (0..n.saturating_sub(1))
        .map(|i| (i, i + 1, weight_rng(&mut rng, wmin, wmax)))
        .collect();
    Ok(WeightedGraph::new(n, edges)?)
}

/// Grid with `floor(sqrt(n))` rows; the last row may be partial.
pub fn grid(n: u32, wmin: Weight, wmax: Weight, seed: u64) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    if n == 0 {
        return Ok(WeightedGraph::new(0, Vec::new())?);
    }
    let rows = (n as f64).sqrt().floor() as u32;
    let cols = n.div_ceil(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-grid", 0));
    let mut edges = Vec::new();
    for v in 0..n {
        let (r, c) = (v / cols, v % cols);
        if c + 1 < cols && v + 1 < n {
            edges.push((v, v + 1, weight_rng(&mut rng, wmin, wmax)));
        }
        if (r + 1) * cols + c < n {
            edges.push((v, v + cols, weight_rng(&mut rng, wmin, wmax)));
        }
    }
    Ok(WeightedGraph::new(n, edges)?)
}

/// G(n, p) with geometric skipping over each row of the adjacency matrix,
/// so the cost is proportional to the number of edges drawn.
pub fn erdos_renyi(
    n: u32,
    p: f64,
    wmin: Weight,
    wmax: Weight,
    seed: u64,
) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::BadParams(format!("p={p} outside [0, 1]")));
    }
    for attempt in 0..MAX_REDRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-er", attempt as u64));
        let mut edges = Vec::new();
        for u in 0..n {
            let mut v = u as u64 + 1;
            loop {
                if p >= 1.0 {
                    // skip stays zero: take every remaining pair
                } else {
                    let roll: f64 = rng.gen_range(0.0..1.0);
                    v += ((1.0 - roll).ln() / (1.0 - p).ln()).floor() as u64;
                }
                if v >= n as u64 {
                    break;
                }
                edges.push((u, v as NodeId, weight_rng(&mut rng, wmin, wmax)));
                v += 1;
            }
        }
        let g = WeightedGraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GenError::CouldNotConnect { n })
}

/// Random geometric graph: nodes at uniform points of the unit square,
/// an edge whenever two points lie within distance `r`. Neighbor search
/// buckets points into cells of side `r`.
pub fn random_geometric(
    n: u32,
    r: f64,
    wmin: Weight,
    wmax: Weight,
    seed: u64,
) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    if !(r > 0.0) {
        return Err(GenError::BadParams(format!("radius {r} must be positive")));
    }
    let cells = (1.0 / r).ceil().max(1.0) as usize;
    for attempt in 0..MAX_REDRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-rgg", attempt as u64));
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let mut grid = vec![Vec::new(); cells * cells];
        let cell_of = |x: f64, y: f64| {
            let cx = ((x * cells as f64) as usize).min(cells - 1);
            let cy = ((y * cells as f64) as usize).min(cells - 1);
            cy * cells + cx
        };
        for (i, &(x, y)) in pts.iter().enumerate() {
            grid[cell_of(x, y)].push(i as NodeId);
        }
        let mut edges = Vec::new();
        for u in 0..n as usize {
            let (x, y) = pts[u];
            let cx = ((x * cells as f64) as usize).min(cells - 1);
            let cy = ((y * cells as f64) as usize).min(cells - 1);
            for dy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                for dx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                    for &v in &grid[dy * cells + dx] {
                        if (v as usize) <= u {
                            continue;
                        }
                        let (px, py) = pts[v as usize];
                        let d2 = (x - px).powi(2) + (y - py).powi(2);
                        if d2 <= r * r {
                            edges.push((u as NodeId, v, weight_rng(&mut rng, wmin, wmax)));
                        }
                    }
                }
            }
        }
        let g = WeightedGraph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GenError::CouldNotConnect { n })
}

/// Star: node 0 is the hub, nodes 1..n are leaves.
pub fn star(n: u32, wmin: Weight, wmax: Weight, seed: u64) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    if n == 0 {
        return Ok(WeightedGraph::new(0, Vec::new())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-star", 0));
    let edges = (1..n)
        .map(|v| (0, v, weight_rng(&mut rng, wmin, wmax)))
        .collect();
    Ok(WeightedGraph::new(n, edges)?)
}

/// Lollipop: a clique on the first `clique` nodes with a path of
/// `n - clique` nodes hanging off node 0. Mixes a dense region with a long
/// sparse tail in one instance.
pub fn lollipop(
    n: u32,
    clique: u32,
    wmin: Weight,
    wmax: Weight,
    seed: u64,
) -> Result<WeightedGraph, GenError> {
    check_weight_range(wmin, wmax)?;
    if clique < 2 || clique > n {
        return Err(GenError::BadParams(format!(
            "clique size {clique} must lie in [2, n={n}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-lollipop", 0));
    let mut edges = Vec::new();
    for u in 0..clique {
        for v in u + 1..clique {
            edges.push((u, v, weight_rng(&mut rng, wmin, wmax)));
        }
    }
    for v in clique..n {
        let prev = if v == clique { 0 } else { v - 1 };
        edges.push((prev, v, weight_rng(&mut rng, wmin, wmax)));
    }
    Ok(WeightedGraph::new(n, edges)?)
}

/// Node roles in the planted hard instance built by [`lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    A,
    B,
    C,
    SideB,
    SideC,
    Path,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::A => "a",
            Role::B => "b",
            Role::C => "c",
            Role::SideB => "side-b",
            Role::SideC => "side-c",
            Role::Path => "path",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Some(match s {
            "a" => Role::A,
            "b" => Role::B,
            "c" => Role::C,
            "side-b" => Role::SideB,
            "side-c" => Role::SideC,
            "path" => Role::Path,
            _ => None?,
        })
    }
}

/// Writes a role sidecar, one `nodeId role` line per node.
pub fn save_roles(roles: &[Role], path: &Path) -> std::io::Result<()> {
    let mut out = String::new();
    for (v, role) in roles.iter().enumerate() {
        let _ = writeln!(out, "{v} {}", role.as_str());
    }
    std::fs::write(path, out)
}

/// Planted instance for the distance lower bound: an unweighted path
/// `a .. b .. c` where `b` sits `L` hops from `a`, with `y` pendant nodes on
/// `b` and another `y` on `c`. The pendant nodes share the reserved
/// identifier block `0..2y`; identifiers below `y` pick their side by a fair
/// coin, the rest fill the remaining pendant slots in order. Path nodes take
/// identifiers `2y..n` in path order, so `a` is node `2y` and `c` is `n-1`.
pub fn lower_bound(n: u32, p: f64, seed: u64) -> Result<(WeightedGraph, Vec<Role>), GenError> {
    let y = n / 4;
    let l = ((p * n as f64).sqrt() / (n as f64).log2()).floor().max(1.0) as u32;
    if n < 2 * y + l + 2 || y == 0 {
        return Err(GenError::BadParams(format!(
            "n={n} too small for pendant blocks of {y} and an a-b stretch of {l}"
        )));
    }
    let path_len = n - 2 * y; // nodes on the path, a and c inclusive
    let a = 2 * y;
    let b = 2 * y + l;
    let c = n - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "gen-lb", 0));
    // Pendant identifiers: the coin decides for ids below y, the remainder
    // fills whichever side still has open slots.
    let mut side_b_ids = Vec::with_capacity(y as usize);
    let mut side_c_ids = Vec::with_capacity(y as usize);
    for id in 0..y {
        if rng.gen_bool(0.5) && side_b_ids.len() < y as usize {
            side_b_ids.push(id);
        } else if side_c_ids.len() < y as usize {
            side_c_ids.push(id);
        } else {
            side_b_ids.push(id);
        }
    }
    for id in y..2 * y {
        if side_b_ids.len() < y as usize {
            side_b_ids.push(id);
        } else {
            side_c_ids.push(id);
        }
    }

    let mut edges = Vec::with_capacity(n as usize - 1 + 2 * y as usize);
    for v in a..a + path_len - 1 {
        edges.push((v, v + 1, 1));
    }
    for &u in &side_b_ids {
        edges.push((u, b, 1));
    }
    for &u in &side_c_ids {
        edges.push((u, c, 1));
    }

    let mut roles = vec![Role::Path; n as usize];
    for &u in &side_b_ids {
        roles[u as usize] = Role::SideB;
    }
    for &u in &side_c_ids {
        roles[u as usize] = Role::SideC;
    }
    roles[a as usize] = Role::A;
    roles[b as usize] = Role::B;
    roles[c as usize] = Role::C;

    Ok((WeightedGraph::new(n, edges)?, roles))
}

/// The `L` parameter of [`lower_bound`], exposed for checks on the output.
pub fn lower_bound_stretch(n: u32, p: f64) -> u32 {
    ((p * n as f64).sqrt() / (n as f64).log2()).floor().max(1.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{brute_diameter, hop_distances};

    #[test]
    fn path_shape() {
        let g = path(5, 1, 1, 0).unwrap();
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(2), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn unit_grid_diameter() {
        let g = grid(9, 1, 1, 0).unwrap();
        assert_eq!(g.num_edges(), 12);
        assert_eq!(brute_diameter(&g).unwrap(), 4);
    }

    #[test]
    fn partial_grid_is_connected() {
        for n in [7, 10, 13, 23] {
            let g = grid(n, 1, 3, 1).unwrap();
            assert!(g.is_connected(), "n={n}");
            assert_eq!(g.n(), n);
        }
    }

    #[test]
    fn erdos_renyi_is_deterministic_and_connected() {
        let a = erdos_renyi(200, 0.04, 1, 10, 5).unwrap();
        let b = erdos_renyi(200, 0.04, 1, 10, 5).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
        let c = erdos_renyi(200, 0.04, 1, 10, 6).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn erdos_renyi_edge_count_tracks_p() {
        let g = erdos_renyi(300, 0.05, 1, 1, 11).unwrap();
        let expected = 0.05 * 300.0 * 299.0 / 2.0;
        let m = g.num_edges() as f64;
        assert!(m > expected * 0.8 && m < expected * 1.2, "m={m}");
    }

    #[test]
    fn geometric_graph_connected_and_deterministic() {
        let a = random_geometric(250, 0.12, 1, 5, 3).unwrap();
        let b = random_geometric(250, 0.12, 1, 5, 3).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
    }

    #[test]
    fn weights_respect_range() {
        let g = erdos_renyi(100, 0.1, 3, 9, 2).unwrap();
        assert!(g.edges().iter().all(|&(_, _, w)| (3..=9).contains(&w)));
    }

    #[test]
    fn star_shape() {
        let g = star(6, 2, 2, 0).unwrap();
        assert_eq!(g.degree(0), 5);
        for v in 1..6 {
            assert_eq!(g.degree(v), 1);
        }
        assert_eq!(crate::graph::dijkstra(&g, 1)[5], 4);
    }

    #[test]
    fn lollipop_mixes_clique_and_tail() {
        let n = 40;
        let g = lollipop(n, 16, 1, 1, 0).unwrap();
        assert!(g.is_connected());
        for u in 0..16 {
            assert!(g.degree(u) >= 15);
        }
        let hops = hop_distances(&g, n - 1);
        assert_eq!(hops[0], (n - 16) as u32);
        assert_eq!(hops[15], (n - 16 + 1) as u32);
        assert!(lollipop(10, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn lower_bound_structure() {
        let n = 64;
        let (g, roles) = lower_bound(n, 0.5, 9).unwrap();
        let y = n / 4;
        let l = lower_bound_stretch(n, 0.5);
        assert_eq!(g.n(), n);
        assert!(g.is_connected());

        let a = (0..n).find(|&v| roles[v as usize] == Role::A).unwrap();
        assert_eq!(a, 2 * y);
        let hops = hop_distances(&g, a);
        let x = n - 2 * y - 1;
        for v in 0..n {
            match roles[v as usize] {
                Role::SideB => assert_eq!(hops[v as usize], l + 1),
                Role::SideC => assert_eq!(hops[v as usize], x + 1),
                Role::C => assert_eq!(hops[v as usize], x),
                Role::B => assert_eq!(hops[v as usize], l),
                _ => {}
            }
        }

        // Pendant nodes own the reserved identifier block.
        for v in 0..n {
            let pendant = matches!(roles[v as usize], Role::SideB | Role::SideC);
            assert_eq!(pendant, v < 2 * y, "node {v}");
        }
        let nb = roles.iter().filter(|r| **r == Role::SideB).count();
        let nc = roles.iter().filter(|r| **r == Role::SideC).count();
        assert_eq!(nb, y as usize);
        assert_eq!(nc, y as usize);
    }

    #[test]
    fn lower_bound_coin_split_varies_with_seed() {
        let (_, r1) = lower_bound(64, 0.5, 1).unwrap();
        let (_, r2) = lower_bound(64, 0.5, 2).unwrap();
        assert_ne!(r1, r2);
    }

    #[test]
    fn role_labels_roundtrip() {
        for role in [
            Role::A,
            Role::B,
            Role::C,
            Role::SideB,
            Role::SideC,
            Role::Path,
        ] {
            assert_eq!(Role::parse(role.as_str()), Some(role));
        }
        assert_eq!(Role::parse("nonsense"), None);
    }
}
