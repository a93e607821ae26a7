//! Executors for the oracle and tiered-oracles message models.
//!
//! Each model comes in two builds with one shared interface: an abstract
//! executor that moves messages directly and counts model rounds, and a
//! Hybrid executor that realizes the same delivery contract on the
//! simulator over a skeleton graph. Algorithms written against the traits
//! run unchanged on either, which is what the equivalence tests exploit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::derive_seed;
use crate::engine::{EngineError, Envelope, Sim};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::primitives::{aggregate_and_broadcast, cc_sim_round, AggOp, CcMessage, CcSimError};
use crate::skeleton::SkeletonGraph;

/// Host encoding of one O(log n)-bit model word.
pub type OracleMsg = Vec<u64>;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("member {member} moves {words} words, budget {budget}")]
    BudgetExceeded {
        member: usize,
        words: usize,
        budget: usize,
    },
    #[error("tiered delivery incomplete after {attempts} attempts")]
    TooManyAttempts { attempts: u32 },
    #[error(transparent)]
    CcSim(#[from] CcSimError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Model rounds charged by the abstract executors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AbstractCost {
    pub oracle_rounds: u64,
    pub tiered_rounds: u64,
    pub cc_rounds: u64,
}

/// Structural view the executors run over: a plain graph or a skeleton,
/// nodes addressed by dense index.
pub trait OracleHost {
    fn m(&self) -> usize;
    fn degree(&self, i: usize) -> usize;
    /// Incident edges as (neighbor index, weight), ascending by neighbor.
    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)>;
}

impl OracleHost for WeightedGraph {
    fn m(&self) -> usize {
        self.n() as usize
    }

    fn degree(&self, i: usize) -> usize {
        self.degree(i as NodeId)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        let mut out: Vec<(usize, Weight)> = self
            .neighbors(i as NodeId)
            .iter()
            .map(|&(j, w)| (j as usize, w))
            .collect();
        out.sort_unstable();
        out
    }
}

impl OracleHost for SkeletonGraph {
    fn m(&self) -> usize {
        self.m()
    }

    fn degree(&self, i: usize) -> usize {
        self.degree(i)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        self.neighbors(i).collect()
    }
}

/// The oracle node: highest degree, ties to the larger index.
pub fn leader_of<H: OracleHost + ?Sized>(host: &H) -> usize {
    (0..host.m())
        .max_by_key(|&i| (host.degree(i), i))
        .expect("leader of an empty member set")
}

fn check_budgets<H: OracleHost + ?Sized>(
    host: &H,
    boxes: &[Vec<OracleMsg>],
) -> Result<(), OracleError> {
    assert_eq!(boxes.len(), host.m());
    for (i, b) in boxes.iter().enumerate() {
        if b.len() > host.degree(i) {
            return Err(OracleError::BudgetExceeded {
                member: i,
                words: b.len(),
                budget: host.degree(i),
            });
        }
    }
    Ok(())
}

/// One round of the oracle model: every member may hand the oracle up to
/// deg(v) words and receive up to deg(v) words back.
pub trait OracleRounds: OracleHost {
    fn leader(&self) -> usize;
    /// Collects the outboxes at the leader; the result is indexed by sender
    /// and preserves each sender's word order.
    fn to_oracle(&mut self, outboxes: Vec<Vec<OracleMsg>>)
        -> Result<Vec<Vec<OracleMsg>>, OracleError>;
    /// Distributes per-member replies from the leader.
    fn from_oracle(&mut self, replies: Vec<Vec<OracleMsg>>)
        -> Result<Vec<Vec<OracleMsg>>, OracleError>;
}

pub struct AbstractOracle<'h, H: OracleHost> {
    host: &'h H,
    pub cost: AbstractCost,
}

impl<'h, H: OracleHost> AbstractOracle<'h, H> {
    pub fn new(host: &'h H) -> Self {
        Self {
            host,
            cost: AbstractCost::default(),
        }
    }
}

impl<H: OracleHost> OracleHost for AbstractOracle<'_, H> {
    fn m(&self) -> usize {
        self.host.m()
    }

    fn degree(&self, i: usize) -> usize {
        self.host.degree(i)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        self.host.edges_of(i)
    }
}

impl<H: OracleHost> OracleRounds for AbstractOracle<'_, H> {
    fn leader(&self) -> usize {
        leader_of(self.host)
    }

    fn to_oracle(
        &mut self,
        outboxes: Vec<Vec<OracleMsg>>,
    ) -> Result<Vec<Vec<OracleMsg>>, OracleError> {
        check_budgets(self.host, &outboxes)?;
        self.cost.oracle_rounds += 1;
        Ok(outboxes)
    }

    fn from_oracle(
        &mut self,
        replies: Vec<Vec<OracleMsg>>,
    ) -> Result<Vec<Vec<OracleMsg>>, OracleError> {
        check_budgets(self.host, &replies)?;
        self.cost.oracle_rounds += 1;
        Ok(replies)
    }
}

pub struct HybridOracle<'a, 'g, 'k> {
    sim: &'a mut Sim<'g>,
    skel: &'k SkeletonGraph,
}

impl<'a, 'g, 'k> HybridOracle<'a, 'g, 'k> {
    pub fn new(sim: &'a mut Sim<'g>, skel: &'k SkeletonGraph) -> Self {
        Self { sim, skel }
    }
}

impl OracleHost for HybridOracle<'_, '_, '_> {
    fn m(&self) -> usize {
        self.skel.m()
    }

    fn degree(&self, i: usize) -> usize {
        self.skel.degree(i)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        self.skel.neighbors(i).collect()
    }
}

impl OracleRounds for HybridOracle<'_, '_, '_> {
    fn leader(&self) -> usize {
        leader_of(self.skel)
    }

    /// Realized as three unicast rounds and one skeleton-local leg: a degree
    /// broadcast fixes the leader everywhere, the leader's neighbors announce
    /// themselves as carriers, every sender ships its q-th word to the q-th
    /// carrier, and the carriers walk their bundles to the leader.
    fn to_oracle(
        &mut self,
        outboxes: Vec<Vec<OracleMsg>>,
    ) -> Result<Vec<Vec<OracleMsg>>, OracleError> {
        let skel = self.skel;
        check_budgets(skel, &outboxes)?;
        let m = skel.m();
        if m <= 1 {
            return Ok(outboxes);
        }
        let ell = leader_of(skel);
        let members = &skel.members;
        let nbrs: Vec<usize> = skel.neighbors(ell).map(|(j, _)| j).collect();

        self.sim.scoped_phase("oracle-sim", |sim| {
            let mut msgs = Vec::new();
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        msgs.push(CcMessage {
                            from: i,
                            to: j,
                            body: vec![skel.degree(i) as u64],
                        });
                    }
                }
            }
            cc_sim_round(sim, members, msgs)?;

            let mut msgs = Vec::new();
            for &u in &nbrs {
                for j in 0..m {
                    if j != u {
                        msgs.push(CcMessage {
                            from: u,
                            to: j,
                            body: vec![1],
                        });
                    }
                }
            }
            cc_sim_round(sim, members, msgs)?;

            // The sender's q-th word rides to carrier nbrs[q]; q stays
            // implicit because every carrier knows its own rank.
            let mut msgs = Vec::new();
            let mut total_items = 0u64;
            for (i, outbox) in outboxes.iter().enumerate() {
                total_items += outbox.len() as u64;
                for (q, item) in outbox.iter().enumerate() {
                    if nbrs[q] != i {
                        msgs.push(CcMessage {
                            from: i,
                            to: nbrs[q],
                            body: item.clone(),
                        });
                    }
                }
            }
            let inboxes = cc_sim_round(sim, members, msgs)?;

            // Carriers walk their bundles to the leader, at most h hops;
            // each word is charged for the full radius.
            sim.advance(skel.h as u64, total_items * skel.h as u64);
            let mut collected: Vec<Vec<(usize, OracleMsg)>> = vec![Vec::new(); m];
            for (q, &u) in nbrs.iter().enumerate() {
                for (i, body) in &inboxes[u] {
                    collected[*i].push((q, body.clone()));
                }
                if outboxes[u].len() > q {
                    collected[u].push((q, outboxes[u][q].clone()));
                }
            }
            Ok(collected
                .into_iter()
                .map(|mut items| {
                    items.sort_unstable_by_key(|&(q, _)| q);
                    items.into_iter().map(|(_, body)| body).collect()
                })
                .collect())
        })
    }

    /// The reverse route: the leader walks each member's reply bundle to a
    /// carrier, then one unicast round per reply rank finishes delivery.
    fn from_oracle(
        &mut self,
        replies: Vec<Vec<OracleMsg>>,
    ) -> Result<Vec<Vec<OracleMsg>>, OracleError> {
        let skel = self.skel;
        check_budgets(skel, &replies)?;
        let m = skel.m();
        if m <= 1 {
            return Ok(replies);
        }
        let ell = leader_of(skel);
        let members = &skel.members;
        let nbrs: Vec<usize> = skel.neighbors(ell).map(|(j, _)| j).collect();

        self.sim.scoped_phase("oracle-sim", |sim| {
            let mut delivered: Vec<Vec<OracleMsg>> = vec![Vec::new(); m];
            delivered[ell] = replies[ell].clone();
            if nbrs.is_empty() {
                // An edgeless skeleton has budget zero everywhere.
                return Ok(delivered);
            }

            let total_items: u64 = replies
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != ell)
                .map(|(_, r)| r.len() as u64)
                .sum();
            sim.advance(skel.h as u64, total_items * skel.h as u64);

            let ranks = replies
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != ell)
                .map(|(_, r)| r.len())
                .max()
                .unwrap_or(0);
            for r in 0..ranks {
                let mut msgs = Vec::new();
                for (v, reply) in replies.iter().enumerate() {
                    if v == ell {
                        continue;
                    }
                    if let Some(item) = reply.get(r) {
                        let carrier = nbrs[v % nbrs.len()];
                        if carrier == v {
                            delivered[v].push(item.clone());
                        } else {
                            msgs.push(CcMessage {
                                from: carrier,
                                to: v,
                                body: item.clone(),
                            });
                        }
                    }
                }
                let inboxes = cc_sim_round(sim, members, msgs)?;
                for (v, inbox) in inboxes.into_iter().enumerate() {
                    for (_, body) in inbox {
                        delivered[v].push(body);
                    }
                }
            }
            Ok(delivered)
        })
    }
}

/// Who ended up knowing whose broadcast after a tiered round. Every node
/// knows its own set.
#[derive(Debug, Clone)]
pub struct TieredDelivery {
    m: usize,
    row_words: usize,
    bits: Vec<u64>,
}

impl TieredDelivery {
    fn new(m: usize) -> Self {
        let row_words = m.div_ceil(64).max(1);
        Self {
            m,
            row_words,
            bits: vec![0; m * row_words],
        }
    }

    fn set(&mut self, u: usize, v: usize) {
        self.bits[u * self.row_words + v / 64] |= 1 << (v % 64);
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// True when receiver u holds the complete broadcast of v.
    pub fn knows(&self, u: usize, v: usize) -> bool {
        u == v || self.bits[u * self.row_words + v / 64] >> (v % 64) & 1 == 1
    }
}

/// One round of the tiered-oracles model plus the unicast rounds its
/// algorithms interleave.
pub trait TieredRounds: OracleHost {
    /// Every member broadcasts `counts[v]` words; receiver u must end up
    /// with the full set of every v with 2*deg(u) >= deg(v).
    fn tiered_round(&mut self, counts: &[usize]) -> Result<TieredDelivery, OracleError>;
    /// One member-to-member unicast round, at most one word per ordered pair.
    fn cc_round(&mut self, msgs: Vec<CcMessage>)
        -> Result<Vec<Vec<(usize, Vec<u64>)>>, OracleError>;
}

pub struct AbstractTiered<'h, H: OracleHost> {
    host: &'h H,
    pub cost: AbstractCost,
}

impl<'h, H: OracleHost> AbstractTiered<'h, H> {
    pub fn new(host: &'h H) -> Self {
        Self {
            host,
            cost: AbstractCost::default(),
        }
    }
}

impl<H: OracleHost> OracleHost for AbstractTiered<'_, H> {
    fn m(&self) -> usize {
        self.host.m()
    }

    fn degree(&self, i: usize) -> usize {
        self.host.degree(i)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        self.host.edges_of(i)
    }
}

impl<H: OracleHost> TieredRounds for AbstractTiered<'_, H> {
    fn tiered_round(&mut self, counts: &[usize]) -> Result<TieredDelivery, OracleError> {
        let m = self.host.m();
        assert_eq!(counts.len(), m);
        for (v, &c) in counts.iter().enumerate() {
            if c > self.host.degree(v) {
                return Err(OracleError::BudgetExceeded {
                    member: v,
                    words: c,
                    budget: self.host.degree(v),
                });
            }
        }
        let mut delivery = TieredDelivery::new(m);
        for u in 0..m {
            for v in 0..m {
                if 2 * self.host.degree(u) >= self.host.degree(v) {
                    delivery.set(u, v);
                }
            }
        }
        self.cost.tiered_rounds += 1;
        Ok(delivery)
    }

    fn cc_round(
        &mut self,
        msgs: Vec<CcMessage>,
    ) -> Result<Vec<Vec<(usize, Vec<u64>)>>, OracleError> {
        let m = self.host.m();
        let mut seen = std::collections::HashSet::new();
        let mut inboxes = vec![Vec::new(); m];
        for msg in msgs {
            assert!(msg.from < m && msg.to < m && msg.from != msg.to);
            if !seen.insert((msg.from, msg.to)) {
                return Err(CcSimError::PayloadTooLarge {
                    from: msg.from,
                    to: msg.to,
                }
                .into());
            }
            inboxes[msg.to].push((msg.from, msg.body));
        }
        for inbox in &mut inboxes {
            inbox.sort_unstable();
        }
        self.cost.cc_rounds += 1;
        Ok(inboxes)
    }
}

const TIERED_MAX_ATTEMPTS: u32 = 32;

pub struct HybridTiered<'a, 'g, 'k> {
    sim: &'a mut Sim<'g>,
    skel: &'k SkeletonGraph,
    /// Attempts the last tiered_round needed before its completeness
    /// aggregate came back true.
    pub last_attempts: u32,
}

impl<'a, 'g, 'k> HybridTiered<'a, 'g, 'k> {
    pub fn new(sim: &'a mut Sim<'g>, skel: &'k SkeletonGraph) -> Self {
        Self {
            sim,
            skel,
            last_attempts: 0,
        }
    }
}

impl OracleHost for HybridTiered<'_, '_, '_> {
    fn m(&self) -> usize {
        self.skel.m()
    }

    fn degree(&self, i: usize) -> usize {
        self.skel.degree(i)
    }

    fn edges_of(&self, i: usize) -> Vec<(usize, Weight)> {
        self.skel.neighbors(i).collect()
    }
}

impl TieredRounds for HybridTiered<'_, '_, '_> {
    /// Scatter, gather, certify: every word is replicated to xRep uniformly
    /// random nodes at gamma sends per member per round, receivers absorb
    /// every copy their h-ball saw, and one AND-aggregate decides whether
    /// the delivery contract held or the round restarts with a fresh seed.
    fn tiered_round(&mut self, counts: &[usize]) -> Result<TieredDelivery, OracleError> {
        let skel = self.skel;
        let m = skel.m();
        assert_eq!(counts.len(), m);
        for (v, &c) in counts.iter().enumerate() {
            if c > skel.degree(v) {
                return Err(OracleError::BudgetExceeded {
                    member: v,
                    words: c,
                    budget: skel.degree(v),
                });
            }
        }
        if m <= 1 {
            self.last_attempts = 1;
            return Ok(TieredDelivery::new(m));
        }

        let mut attempts_used = 0;
        let delivery = self.sim.scoped_phase("tiered-sim", |sim| {
            let n = sim.graph().n() as usize;
            let gamma = sim.gamma() as usize;
            assert!(gamma >= 1, "the scatter needs a global channel");
            let mw = m.div_ceil(64);

            // Which members see each node within h hops; the OR of a copy's
            // landing masks is exactly who can absorb it.
            let mut ballmask = vec![0u64; n * mw];
            for u in 0..m {
                let row = skel.mark_dists.row(u);
                for (x, &d) in row.iter().enumerate() {
                    if d != INF {
                        ballmask[x * mw + u / 64] |= 1 << (u % 64);
                    }
                }
            }

            let sampler = sim.config().sampler_const;
            let lnm = (m as f64).ln();
            let xrep: Vec<usize> = (0..m)
                .map(|v| {
                    if counts[v] == 0 {
                        0
                    } else {
                        (sampler * 2.0 * m as f64 * lnm / skel.degree(v) as f64).ceil() as usize
                    }
                })
                .collect();

            let base_seed = derive_seed(sim.config().seed, "tiered", sim.current_round());
            for attempt in 0..TIERED_MAX_ATTEMPTS {
                let aseed = derive_seed(base_seed, "attempt", attempt as u64);
                let targets: Vec<Vec<NodeId>> = (0..m)
                    .map(|v| {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(aseed, "scatter", v as u64));
                        (0..counts[v] * xrep[v])
                            .map(|_| rng.gen_range(0..n as u32))
                            .collect()
                    })
                    .collect();

                // acc[v] narrows to the receivers that saw every word of v.
                let mut acc = vec![vec![u64::MAX; mw]; m];
                let mut open: Vec<(usize, Vec<u64>)> = vec![(usize::MAX, vec![0; mw]); m];
                let mut closed = vec![0usize; m];
                let mut gather_pairs = 0u64;
                let rounds = targets
                    .iter()
                    .map(|t| t.len().div_ceil(gamma))
                    .max()
                    .unwrap_or(0);
                let close = |v: usize,
                             slot: &mut (usize, Vec<u64>),
                             acc: &mut Vec<Vec<u64>>,
                             closed: &mut Vec<usize>| {
                    if slot.0 != usize::MAX {
                        for (a, b) in acc[v].iter_mut().zip(&slot.1) {
                            *a &= b;
                        }
                        closed[v] += 1;
                    }
                };
                for r in 0..rounds {
                    let mut sends = Vec::new();
                    for (v, list) in targets.iter().enumerate() {
                        let lo = r * gamma;
                        if lo >= list.len() {
                            continue;
                        }
                        let hi = ((r + 1) * gamma).min(list.len());
                        for (k, &x) in list[lo..hi].iter().enumerate() {
                            let t = (lo + k) / xrep[v];
                            sends.push(Envelope::global(
                                skel.members[v],
                                x,
                                vec![v as u64, t as u64],
                            ));
                        }
                    }
                    let mut by_v: Vec<Vec<(usize, NodeId)>> = vec![Vec::new(); m];
                    for env in sim.round(sends, 0)? {
                        by_v[env.payload[0] as usize].push((env.payload[1] as usize, env.to));
                    }
                    for (v, mut hits) in by_v.into_iter().enumerate() {
                        hits.sort_unstable();
                        for (t, x) in hits {
                            if open[v].0 != t {
                                let mut slot = std::mem::replace(
                                    &mut open[v],
                                    (t, vec![0; mw]),
                                );
                                close(v, &mut slot, &mut acc, &mut closed);
                            }
                            let mask = &ballmask[x as usize * mw..(x as usize + 1) * mw];
                            gather_pairs += mask.iter().map(|w| w.count_ones() as u64).sum::<u64>();
                            for (o, b) in open[v].1.iter_mut().zip(mask) {
                                *o |= b;
                            }
                        }
                    }
                }
                for v in 0..m {
                    let mut slot = std::mem::replace(&mut open[v], (usize::MAX, Vec::new()));
                    close(v, &mut slot, &mut acc, &mut closed);
                    if closed[v] != counts[v] {
                        // A word lost every copy; nobody may claim the set.
                        acc[v] = vec![0; mw];
                    }
                    acc[v][v / 64] |= 1 << (v % 64);
                }

                // Landed copies spread through their h-balls; one word per
                // (copy, visible member) pair, charged for the full radius.
                sim.advance(skel.h as u64, gather_pairs * skel.h as u64);

                // Receive-side certification, folded by one AND-aggregate.
                let mut values = vec![1u64; n];
                let mut ok = true;
                for u in 0..m {
                    let mut u_ok = true;
                    for v in 0..m {
                        if counts[v] > 0
                            && 2 * skel.degree(u) >= skel.degree(v)
                            && acc[v][u / 64] >> (u % 64) & 1 == 0
                        {
                            u_ok = false;
                            break;
                        }
                    }
                    values[skel.members[u] as usize] = u_ok as u64;
                    ok &= u_ok;
                }
                let agreed = aggregate_and_broadcast(sim, &values, AggOp::And)?;
                debug_assert_eq!(agreed == 1, ok);
                if agreed == 1 {
                    attempts_used = attempt + 1;
                    let mut delivery = TieredDelivery::new(m);
                    for v in 0..m {
                        for u in 0..m {
                            if acc[v][u / 64] >> (u % 64) & 1 == 1 {
                                delivery.set(u, v);
                            }
                        }
                    }
                    return Ok(delivery);
                }
            }
            Err(OracleError::TooManyAttempts {
                attempts: TIERED_MAX_ATTEMPTS,
            })
        })?;
        self.last_attempts = attempts_used;
        Ok(delivery)
    }

    /// Tier occupancy is globally known from the degree table, so rounds
    /// with no messages cost nothing.
    fn cc_round(
        &mut self,
        msgs: Vec<CcMessage>,
    ) -> Result<Vec<Vec<(usize, Vec<u64>)>>, OracleError> {
        if msgs.is_empty() {
            return Ok(vec![Vec::new(); self.skel.m()]);
        }
        Ok(cc_sim_round(self.sim, &self.skel.members, msgs)?)
    }
}
