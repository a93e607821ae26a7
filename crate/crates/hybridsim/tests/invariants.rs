//! Property tests over the public surface: whatever graph, weights and
//! seed come out of the strategy, exactness, envelopes, capacity and
//! reproducibility must hold.

use std::collections::BTreeSet;

use proptest::prelude::*;

use hybridsim::algos::{approx_mssp, hybrid_exact_sssp};
use hybridsim::engine::{Channel, HybridConfig, Sim};
use hybridsim::gen;
use hybridsim::graph::{dijkstra, WeightedGraph, INF};
use hybridsim::primitives::{token_dissemination, Token};

/// Connected weighted graphs small enough to brute-force, with enough
/// expected degree that the generator never exhausts its redraws.
fn graph_strategy() -> impl Strategy<Value = (WeightedGraph, u64)> {
    (16u32..=72, 6.0f64..12.0, prop_oneof![Just(1u64), Just(10), Just(100)], 0u64..10_000)
        .prop_map(|(n, deg, wmax, seed)| {
            let p = deg / f64::from(n - 1);
            let g = gen::erdos_renyi(n, p, 1, wmax, seed).expect("degree stays above ln n");
            (g, seed)
        })
}

fn source_set(n: u32, picks: &[u32]) -> Vec<u32> {
    let set: BTreeSet<u32> = picks.iter().map(|&p| p % n).collect();
    set.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_sssp_agrees_with_dijkstra_and_never_drops(
        (g, seed) in graph_strategy(),
        source in 0u32..72,
    ) {
        let s = source % g.n();
        let mut sim = Sim::new(&g, HybridConfig::new(seed));
        let run = hybrid_exact_sssp(&mut sim, s, 4).unwrap();
        prop_assert_eq!(run.dist, dijkstra(&g, s));
        prop_assert_eq!(sim.ledger().total_drops(), 0);
    }

    #[test]
    fn multi_source_estimates_stay_inside_the_weighted_envelope(
        (g, seed) in graph_strategy(),
        picks in prop::collection::vec(0u32..72, 1..4),
    ) {
        let sources = source_set(g.n(), &picks);
        let mut sim = Sim::new(&g, HybridConfig::new(seed));
        let run = approx_mssp(&mut sim, &sources, 1, 4).unwrap();
        for (q, &s) in sources.iter().enumerate() {
            let truth = dijkstra(&g, s);
            for v in 0..g.n() as usize {
                let (est, d) = (run.rows.get(q, v as u32), truth[v]);
                prop_assert!(d < INF && est < INF, "generator promised connectivity");
                prop_assert!(est >= d, "estimate {est} under truth {d} for ({s}, {v})");
                prop_assert!(est <= 3 * d || est == d, "estimate {est} over 3 * {d} for ({s}, {v})");
            }
        }
    }

    #[test]
    fn global_deliveries_respect_send_and_receive_budgets(
        (g, seed) in graph_strategy(),
    ) {
        let mut sim = Sim::new(&g, HybridConfig::new(seed));
        sim.enable_transcript();
        hybrid_exact_sssp(&mut sim, 0, 4).unwrap();

        let gamma = u64::from(sim.gamma());
        let events = sim.transcript().unwrap();
        let mut sent = std::collections::HashMap::new();
        let mut received = std::collections::HashMap::new();
        for e in events {
            if e.channel == Channel::Global {
                *sent.entry((e.round, e.from)).or_insert(0u64) += u64::from(e.words);
                *received.entry((e.round, e.to)).or_insert(0u64) += u64::from(e.words);
            }
        }
        for ((round, v), words) in sent.iter().chain(received.iter()) {
            prop_assert!(
                *words <= gamma,
                "node {v} moved {words} global words in round {round}, budget {gamma}"
            );
        }
    }

    #[test]
    fn identical_seeds_reproduce_the_run_and_its_ledger(
        (g, seed) in graph_strategy(),
    ) {
        let mut first = Sim::new(&g, HybridConfig::new(seed));
        let a = hybrid_exact_sssp(&mut first, 0, 4).unwrap();
        let mut second = Sim::new(&g, HybridConfig::new(seed));
        let b = hybrid_exact_sssp(&mut second, 0, 4).unwrap();
        prop_assert_eq!(a.dist, b.dist);
        prop_assert_eq!(a.skeleton_m, b.skeleton_m);
        prop_assert_eq!(first.ledger().to_csv(), second.ledger().to_csv());
    }

    #[test]
    fn every_started_token_reaches_the_common_set(
        (g, seed) in graph_strategy(),
        k_frac in 0.1f64..1.0,
    ) {
        let n = g.n();
        let k = ((f64::from(n) * k_frac) as usize).max(1);
        let mut start = vec![Vec::new(); n as usize];
        for id in 0..k {
            start[id].push(Token { owner: id as u32, body: 7000 + id as u64 });
        }
        let mut sim = Sim::new(&g, HybridConfig::new(seed));
        let out = token_dissemination(&mut sim, &start, k, 1).unwrap();
        prop_assert_eq!(out.tokens.len(), k);
        let bodies: BTreeSet<u64> = out.tokens.iter().map(|t| t.body).collect();
        for id in 0..k {
            prop_assert!(bodies.contains(&(7000 + id as u64)), "token {id} went missing");
        }
        prop_assert_eq!(sim.ledger().total_drops(), 0);
    }
}
