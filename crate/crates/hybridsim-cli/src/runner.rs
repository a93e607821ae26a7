//! Executes one scenario: builds the per-seed graph, drives the requested
//! algorithm on a fresh simulator, verifies the output against a
//! centralized oracle and reports the round ledger.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use hybridsim::algos;
use hybridsim::derive_seed;
use hybridsim::engine::{Channel, HybridConfig, LambdaMode, PhaseStats, Sim};
use hybridsim::gen::{self, Role};
use hybridsim::graph::{
    brute_diameter, brute_eccentricities, dijkstra, hop_distances, NodeId, Weight, WeightedGraph,
    INF,
};
use hybridsim::oracle::{
    AbstractOracle, AbstractTiered, HybridOracle, HybridTiered, OracleMsg, OracleRounds,
    TieredRounds,
};
use hybridsim::primitives::{token_dissemination, Token};
use hybridsim::skeleton::{
    build_skeleton, h_for, sample_marks, structure_ok, verify_properties, SkeletonGraph,
};

use crate::scenario::{Algo, GraphSpec, Scenario, SourcePick};

/// Everything one (scenario, seed) run produced. `max_error` is the worst
/// deviation found among violating entries: the absolute difference for
/// exact algorithms, the envelope deficit for approximate ones. Entries
/// inside their envelope contribute nothing.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub rounds: u64,
    pub local_msgs: u64,
    pub global_msgs: u64,
    pub drops: u64,
    pub max_error: u64,
    pub violations: u64,
    pub retries: u32,
    pub phases: Vec<(String, PhaseStats)>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: String,
    pub outcomes: Vec<SeedOutcome>,
}

/// Builds the scenario's graph for one seed. Lower-bound instances also
/// return their role labels.
pub fn build_graph(
    spec: &GraphSpec,
    wmin: u64,
    wmax: u64,
    seed: u64,
) -> Result<(WeightedGraph, Option<Vec<Role>>)> {
    let built = match *spec {
        GraphSpec::ErdosRenyi { n, p } => (gen::erdos_renyi(n, p, wmin, wmax, seed)?, None),
        GraphSpec::Path { n } => (gen::path(n, wmin, wmax, seed)?, None),
        GraphSpec::Grid { n } => (gen::grid(n, wmin, wmax, seed)?, None),
        GraphSpec::Geometric { n, radius } => {
            (gen::random_geometric(n, radius, wmin, wmax, seed)?, None)
        }
        GraphSpec::Star { n } => (gen::star(n, wmin, wmax, seed)?, None),
        GraphSpec::Lollipop { n, clique } => (gen::lollipop(n, clique, wmin, wmax, seed)?, None),
        GraphSpec::LowerBound { n, p } => {
            let (g, roles) = gen::lower_bound(n, p, seed)?;
            (g, Some(roles))
        }
        GraphSpec::File(ref path) => (
            WeightedGraph::load(path)
                .with_context(|| format!("loading graph {}", path.display()))?,
            None,
        ),
    };
    Ok(built)
}

/// Resolves a source-count request to concrete node ids, strictly
/// ascending.
pub fn pick_sources(
    n: u32,
    count: usize,
    pick: SourcePick,
    roles: Option<&[Role]>,
) -> Result<Vec<NodeId>> {
    let count = count.clamp(1, n as usize);
    let ids = match pick {
        SourcePick::Spread => {
            let mut ids: Vec<NodeId> = (0..count)
                .map(|q| ((q as u64 * u64::from(n)) / count as u64) as NodeId)
                .collect();
            ids.dedup();
            ids
        }
        SourcePick::Extremes => {
            let mut set = BTreeSet::new();
            let low = count.div_ceil(2);
            for v in 0..low {
                set.insert(v as NodeId);
            }
            for i in 0..count - low {
                set.insert(n - 1 - i as NodeId);
            }
            set.into_iter().collect()
        }
        SourcePick::Pendants => {
            let roles =
                roles.ok_or_else(|| anyhow!("`sources = pendants` needs a lower-bound graph"))?;
            roles
                .iter()
                .enumerate()
                .filter(|(_, r)| matches!(r, Role::SideB | Role::SideC))
                .map(|(v, _)| v as NodeId)
                .take(count)
                .collect()
        }
    };
    if ids.is_empty() {
        bail!("source selection came up empty");
    }
    Ok(ids)
}

fn ceil_log2(m: u64) -> u64 {
    if m <= 1 {
        0
    } else {
        u64::from((m - 1).ilog2()) + 1
    }
}

/// Max error and violation count for an exact distance row.
fn exact_row(got: impl Iterator<Item = Weight>, want: &[Weight]) -> (u64, u64) {
    let mut err = 0u64;
    let mut viol = 0u64;
    for (g, &w) in got.zip(want) {
        if g != w {
            viol += 1;
            err = err.max(g.abs_diff(w));
        }
    }
    (err, viol)
}

fn merge((ea, va): (u64, u64), (eb, vb): (u64, u64)) -> (u64, u64) {
    (ea.max(eb), va + vb)
}

/// Verifies one exact distance row per source against Dijkstra, in
/// parallel over sources.
fn verify_rows_exact(
    g: &WeightedGraph,
    sources: &[NodeId],
    row: impl Fn(usize, usize) -> Weight + Sync,
) -> (u64, u64) {
    sources
        .par_iter()
        .enumerate()
        .map(|(q, &s)| {
            let want = dijkstra(g, s);
            exact_row((0..want.len()).map(|v| row(q, v)), &want)
        })
        .reduce(|| (0, 0), merge)
}

/// Checks an estimate against `lo_num/lo_den * d <= est <= hi_num/hi_den * d`
/// and returns the deficit when it falls outside.
fn envelope_entry(est: Weight, d: Weight, hi: (u64, u64), lo: (u64, u64)) -> Option<u64> {
    if d == INF || est == INF {
        return (d != est).then_some(u64::MAX);
    }
    let scaled_hi = u128::from(est) * u128::from(hi.1);
    let cap = u128::from(d) * u128::from(hi.0);
    if scaled_hi > cap {
        return Some(((scaled_hi - cap) / u128::from(hi.1)).min(u128::from(u64::MAX)) as u64);
    }
    let scaled_lo = u128::from(est) * u128::from(lo.1);
    let floor = u128::from(d) * u128::from(lo.0);
    if scaled_lo < floor {
        return Some(((floor - scaled_lo) / u128::from(lo.1)).min(u128::from(u64::MAX)) as u64);
    }
    None
}

/// Sums delivered global words per (round, sender) and (round, receiver)
/// and counts the groups that exceed gamma. The engine is supposed to make
/// this impossible; the audit exists to catch it if it ever is not.
fn capacity_breaches(sim: &Sim) -> u64 {
    let Some(events) = sim.transcript() else {
        return 0;
    };
    let gamma = u64::from(sim.gamma());
    let mut sent: BTreeMap<(u64, NodeId), u64> = BTreeMap::new();
    let mut recv: BTreeMap<(u64, NodeId), u64> = BTreeMap::new();
    for e in events {
        if matches!(e.channel, Channel::Global) {
            *sent.entry((e.round, e.from)).or_default() += u64::from(e.words);
            *recv.entry((e.round, e.to)).or_default() += u64::from(e.words);
        }
    }
    sent.values().chain(recv.values()).filter(|&&w| w > gamma).count() as u64
}

/// Builds a structurally sound skeleton for the simulation-equivalence
/// scenarios, retrying the sample like the algorithms do.
fn sound_skeleton(
    sim: &mut Sim,
    x: f64,
    max_retries: u32,
    seed: u64,
) -> Result<(SkeletonGraph, u32)> {
    let n = sim.graph().n();
    let h = h_for(n, x, sim.config().h_const);
    for attempt in 0..=max_retries {
        let marks = sample_marks(n, x, derive_seed(seed, "sim-marks", u64::from(attempt)), &[]);
        let skel = build_skeleton(sim, x, h, marks);
        if structure_ok(n, &skel) {
            return Ok((skel, attempt));
        }
    }
    bail!("no structurally sound skeleton after {} attempts", max_retries + 1)
}

/// Runs one seed of a scenario. `transcript` additionally audits delivered
/// global traffic against the per-node budget.
pub fn run_seed(sc: &Scenario, seed: u64, transcript: bool) -> Result<SeedOutcome> {
    let (g, roles) = build_graph(&sc.graph, sc.wmin, sc.wmax, seed)?;
    let n = g.n();
    if n == 0 {
        bail!("scenario graph is empty");
    }

    let mut cfg = HybridConfig::new(seed);
    cfg.gamma_const = sc.gamma_const;
    cfg.h_const = sc.h_const;
    cfg.sampler_const = sc.sampler_const;
    cfg.theta = sc.theta;
    if let Some(l) = sc.lambda {
        cfg.lambda = LambdaMode::Bounded(l);
    }
    let mut sim = Sim::new(&g, cfg);
    if transcript {
        sim.enable_transcript();
    }

    let mut max_error = 0u64;
    let mut violations = 0u64;
    let mut retries = 0u32;
    let mut note;
    // Abstract-executor scenarios have no simulator traffic; they report
    // model rounds instead of the (empty) ledger.
    let mut abstract_rounds: Option<u64> = None;

    match sc.algorithm {
        Algo::HybridExactSssp => {
            let s = sc.source.min(n - 1);
            let run = algos::hybrid_exact_sssp(&mut sim, s, sc.max_retries)?;
            retries = run.retries;
            note = format!("m={}", run.skeleton_m);
            if sc.verify {
                let (e, v) = verify_rows_exact(&g, &[s], |_, v| run.dist[v]);
                max_error = max_error.max(e);
                violations += v;
            }
        }

        Algo::TieredApsp => {
            let mut exec = AbstractTiered::new(&g);
            let dist = algos::tiered_apsp(&mut exec)?;
            let m = n as usize;
            if sc.verify {
                let all: Vec<NodeId> = (0..n).collect();
                let (e, v) = verify_rows_exact(&g, &all, |q, u| dist[q * m + u]);
                max_error = max_error.max(e);
                violations += v;
            }
            let cc_cap = 2 * ceil_log2(m as u64);
            if exec.cost.tiered_rounds != 1 {
                violations += 1;
            }
            if exec.cost.cc_rounds > cc_cap {
                violations += 1;
            }
            note = format!(
                "tiered={} cc={} cap={}",
                exec.cost.tiered_rounds, exec.cost.cc_rounds, cc_cap
            );
            abstract_rounds = Some(exec.cost.tiered_rounds + exec.cost.cc_rounds);
        }

        Algo::SkeletonApsp => {
            let run = algos::skeleton_apsp(&mut sim, sc.x, &[], sc.max_retries)?;
            retries = run.retries;
            let m = run.skel.m();
            note = format!("m={m}");
            if sc.verify {
                let (e, v) = run
                    .skel
                    .members
                    .par_iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        let want = dijkstra(&g, s);
                        exact_row(
                            (0..m).map(|j| run.dist[i * m + j]),
                            &run.skel
                                .members
                                .iter()
                                .map(|&t| want[t as usize])
                                .collect::<Vec<_>>(),
                        )
                    })
                    .reduce(|| (0, 0), merge);
                max_error = max_error.max(e);
                violations += v;
            }
        }

        Algo::Rssp => {
            let run = algos::rssp(&mut sim, sc.x, sc.max_retries)?;
            retries = run.retries;
            note = format!("sources={} m={}", run.sources.len(), run.skel.m());
            if sc.verify {
                let (e, v) = verify_rows_exact(&g, &run.sources, |q, v| {
                    run.rows.get(q, v as NodeId)
                });
                max_error = max_error.max(e);
                violations += v;
            }
        }

        Algo::ExactN13Ssp => {
            let sources = pick_sources(n, sc.sources_count, sc.sources, roles.as_deref())?;
            let run = algos::exact_n13_sssp(&mut sim, &sources, sc.max_retries)?;
            retries = run.retries;
            note = format!("dense={} sparse={}", run.dense.len(), run.sparse.len());
            if sc.verify {
                let (e, v) =
                    verify_rows_exact(&g, &sources, |q, v| run.rows.get(q, v as NodeId));
                max_error = max_error.max(e);
                violations += v;
                // The fixture instance must exercise both source classes.
                if matches!(sc.graph, GraphSpec::Lollipop { .. }) {
                    violations += u64::from(run.dense.is_empty());
                    violations += u64::from(run.sparse.is_empty());
                }
            }
        }

        Algo::ApproxMssp => {
            let sources = pick_sources(n, sc.sources_count, sc.sources, roles.as_deref())?;
            let eta = sc.eta.max(1);
            let run = algos::approx_mssp(&mut sim, &sources, eta, sc.max_retries)?;
            retries = run.retries;
            note = format!("sources={} eta={eta}", sources.len());
            if sc.verify {
                let unweighted = g.edges().iter().all(|&(_, _, w)| w == 1);
                let hi = if unweighted {
                    (u64::from(eta) + 2, u64::from(eta))
                } else {
                    (3, 1)
                };
                let (e, v) = sources
                    .par_iter()
                    .enumerate()
                    .map(|(q, &s)| {
                        let want = dijkstra(&g, s);
                        let mut err = 0u64;
                        let mut viol = 0u64;
                        for (v, &d) in want.iter().enumerate() {
                            let est = run.rows.get(q, v as NodeId);
                            if let Some(over) = envelope_entry(est, d, hi, (1, 1)) {
                                viol += 1;
                                err = err.max(over);
                            }
                        }
                        (err, viol)
                    })
                    .reduce(|| (0, 0), merge);
                max_error = max_error.max(e);
                violations += v;
            }
        }

        Algo::EccWeighted | Algo::EccUnweighted => {
            let inv = sc.inv_eps.max(1);
            let (run, lo) = match sc.algorithm {
                Algo::EccWeighted => (algos::ecc_weighted(&mut sim, sc.max_retries)?, (1, 3)),
                _ => (
                    algos::ecc_unweighted(&mut sim, inv, sc.max_retries)?,
                    (u64::from(inv), u64::from(inv) + 1),
                ),
            };
            retries = run.retries;
            if sc.verify {
                let want = brute_eccentricities(&g)?;
                for (v, &w) in want.iter().enumerate() {
                    if let Some(over) = envelope_entry(run.ecc[v], w, (1, 1), lo) {
                        violations += 1;
                        max_error = max_error.max(over);
                    }
                }
            }
            note = format!("inv-eps={inv}");
        }

        Algo::DiameterWeighted | Algo::DiameterUnweighted => {
            let inv = sc.inv_eps.max(1);
            let (run, lo) = match sc.algorithm {
                Algo::DiameterWeighted => {
                    (algos::diameter_weighted(&mut sim, sc.max_retries)?, (1, 2))
                }
                _ => (
                    algos::diameter_unweighted(&mut sim, inv, sc.max_retries)?,
                    (u64::from(inv), u64::from(inv) + 1),
                ),
            };
            retries = run.retries;
            note = format!("value={}", run.value);
            if sc.verify {
                let d = brute_diameter(&g)?;
                if let Some(over) = envelope_entry(run.value, d, (1, 1), lo) {
                    violations += 1;
                    max_error = max_error.max(over);
                }
                write!(note, " true={d}").expect("write to string");
            }
        }

        Algo::TokenDissemination => {
            let ell = sc.ell.max(1);
            let k = sc.k.clamp(1, n as usize * ell);
            let mut start = vec![Vec::new(); n as usize];
            for id in 0..k {
                let v = id / ell;
                start[v].push(Token {
                    owner: v as NodeId,
                    body: id as u64,
                });
            }
            let out = token_dissemination(&mut sim, &start, k, ell)?;
            note = format!("k={k} restarts={}", out.restarts);
            if sc.verify && out.tokens.len() != k {
                violations += 1;
            }
        }

        Algo::SkeletonProperties => {
            let h = h_for(n, sc.x, sim.config().h_const);
            let marks = sample_marks(n, sc.x, derive_seed(seed, "marks", 0), &[]);
            let skel = build_skeleton(&mut sim, sc.x, h, marks);
            let report = verify_properties(&g, &skel);
            violations += u64::from(!report.all_hold());
            note = format!(
                "m={} conn={} dist={} paths={} size={}",
                report.m,
                report.connected,
                report.distances_exact,
                report.paths_compliant,
                report.size_in_range
            );
        }

        Algo::OracleSim => {
            let (skel, r) = sound_skeleton(&mut sim, sc.x, sc.max_retries, seed)?;
            retries = r;
            let m = skel.m();
            let outboxes: Vec<Vec<OracleMsg>> = (0..m)
                .map(|i| {
                    skel.neighbors(i)
                        .map(|(j, w)| vec![j as u64, w])
                        .collect()
                })
                .collect();
            let replies: Vec<Vec<OracleMsg>> = (0..m)
                .map(|i| {
                    if skel.degree(i) > 0 {
                        vec![vec![i as u64, u64::from(skel.h)]]
                    } else {
                        Vec::new()
                    }
                })
                .collect();

            let mut abs = AbstractOracle::new(&skel);
            let want_in = abs.to_oracle(outboxes.clone())?;
            let want_out = abs.from_oracle(replies.clone())?;

            let (got_in, got_out) = {
                let mut hyb = HybridOracle::new(&mut sim, &skel);
                (hyb.to_oracle(outboxes)?, hyb.from_oracle(replies)?)
            };

            let bad = (0..m)
                .filter(|&i| got_in[i] != want_in[i] || got_out[i] != want_out[i])
                .count();
            violations += bad as u64;
            note = format!("m={m}");
        }

        Algo::TieredSim => {
            let (skel, r) = sound_skeleton(&mut sim, sc.x, sc.max_retries, seed)?;
            retries = r;
            let m = skel.m();
            let counts: Vec<usize> = (0..m).map(|i| skel.degree(i)).collect();

            let mut abs = AbstractTiered::new(&skel);
            let want = abs.tiered_round(&counts)?;
            let (got, attempts) = {
                let mut hyb = HybridTiered::new(&mut sim, &skel);
                let got = hyb.tiered_round(&counts)?;
                (got, hyb.last_attempts)
            };

            let mut missed = 0u64;
            for u in 0..m {
                for v in 0..m {
                    if want.knows(u, v) && !got.knows(u, v) {
                        missed += 1;
                    }
                }
            }
            violations += missed;
            note = format!("m={m} attempts={attempts}");
        }

        Algo::LowerBoundCheck => {
            let GraphSpec::LowerBound { n: ln, p } = sc.graph else {
                bail!("lowerBoundCheck wants graph = lower-bound");
            };
            let roles = roles.expect("lower-bound graphs carry roles");
            let stretch = u64::from(gen::lower_bound_stretch(ln, p));
            let a = roles
                .iter()
                .position(|r| *r == Role::A)
                .expect("instance has an a node") as NodeId;
            let c = roles
                .iter()
                .position(|r| *r == Role::C)
                .expect("instance has a c node");
            let hops = hop_distances(&g, a);
            let x_hops = u64::from(hops[c]);
            for (v, role) in roles.iter().enumerate() {
                let got = u64::from(hops[v]);
                let want = match role {
                    Role::SideB => stretch + 1,
                    Role::SideC => x_hops + 1,
                    _ => continue,
                };
                if got != want {
                    violations += 1;
                    max_error = max_error.max(got.abs_diff(want));
                }
            }
            note = format!("L={stretch} x={x_hops}");
            abstract_rounds = Some(0);
        }
    }

    if transcript {
        violations += capacity_breaches(&sim);
    }

    let (rounds, local_msgs, global_msgs, drops, phases) = match abstract_rounds {
        Some(r) => (r, 0, 0, 0, Vec::new()),
        None => {
            let led = sim.ledger();
            let mut phases = Vec::new();
            let (mut lm, mut gm, mut dr) = (0u64, 0u64, 0u64);
            for (name, st) in led.phases() {
                lm += st.local_msgs;
                gm += st.global_msgs;
                dr += st.drops;
                phases.push((name.to_string(), *st));
            }
            (led.total_rounds(), lm, gm, dr, phases)
        }
    };

    Ok(SeedOutcome {
        seed,
        rounds,
        local_msgs,
        global_msgs,
        drops,
        max_error,
        violations,
        retries,
        phases,
        note,
    })
}

/// Runs every seed of a scenario, in parallel, rows ordered by seed.
pub fn run_scenario(sc: &Scenario, transcript: bool) -> Result<RunOutput> {
    let results: Vec<Result<SeedOutcome>> = sc
        .seeds
        .par_iter()
        .map(|&seed| run_seed(sc, seed, transcript).with_context(|| format!("seed {seed}")))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }
    outcomes.sort_by_key(|o| o.seed);
    Ok(RunOutput {
        scenario: sc.name.clone(),
        outcomes,
    })
}

pub fn results_csv(runs: &[RunOutput]) -> String {
    let mut out =
        String::from("scenario,seed,rounds,localMsgs,globalMsgs,drops,maxError,violations,retries\n");
    for run in runs {
        for o in &run.outcomes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                run.scenario,
                o.seed,
                o.rounds,
                o.local_msgs,
                o.global_msgs,
                o.drops,
                o.max_error,
                o.violations,
                o.retries
            )
            .expect("write to string");
        }
    }
    out
}

pub fn ledger_csv(runs: &[RunOutput]) -> String {
    let mut out = String::from("scenario,seed,phase,rounds,localMsgs,globalMsgs,drops\n");
    for run in runs {
        for o in &run.outcomes {
            for (phase, st) in &o.phases {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    run.scenario,
                    o.seed,
                    phase,
                    st.rounds,
                    st.local_msgs,
                    st.global_msgs,
                    st.drops
                )
                .expect("write to string");
            }
        }
    }
    out
}

pub fn summary_text(runs: &[RunOutput]) -> String {
    let mut out = String::new();
    for run in runs {
        let seeds = run.outcomes.len();
        let viol: u64 = run.outcomes.iter().map(|o| o.violations).sum();
        let drops: u64 = run.outcomes.iter().map(|o| o.drops).sum();
        let err = run.outcomes.iter().map(|o| o.max_error).max().unwrap_or(0);
        let verdict = if viol == 0 { "PASS" } else { "FAIL" };
        writeln!(out, "scenario {}", run.scenario).expect("write to string");
        for o in &run.outcomes {
            writeln!(
                out,
                "  seed {}: rounds {}, drops {}, maxError {}, violations {}, retries {} ({})",
                o.seed, o.rounds, o.drops, o.max_error, o.violations, o.retries, o.note
            )
            .expect("write to string");
        }
        writeln!(
            out,
            "  {verdict}: {seeds} seeds, max error {err}, {viol} violations, {drops} dropped words"
        )
        .expect("write to string");
    }
    out
}

/// Writes results.csv, ledger.csv and summary.txt into `out_dir`.
pub fn write_outputs(out_dir: &Path, runs: &[RunOutput], extra: Option<&str>) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    fs::write(out_dir.join("results.csv"), results_csv(runs))?;
    fs::write(out_dir.join("ledger.csv"), ledger_csv(runs))?;
    let mut text = summary_text(runs);
    if let Some(extra) = extra {
        text.push_str(extra);
    }
    fs::write(out_dir.join("summary.txt"), text)?;
    Ok(())
}
