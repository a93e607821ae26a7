//! Round-driven simulator core for the Hybrid network model.
//!
//! Per round a node may send along each incident local edge (up to `lambda`
//! words each under a bounded mode) and may send and receive at most `gamma`
//! words over the global channel. Excess global words are removed by the
//! configured adversary policy, once on the send side and once on the receive
//! side. Every removal is counted in the ledger, so a protocol that claims to
//! be loss-free is auditable by `drops == 0`.
//!
//! Messages handed to [`Sim::round`] are delivered at the start of the next
//! round. Bulk protocols that move identical records along many local edges
//! can charge their traffic arithmetically via the `bulk_local_msgs` argument
//! instead of materializing envelopes; global traffic is always materialized.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::derive_seed;
use crate::graph::{NodeId, Weight, WeightedGraph};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("protocol exceeded the round limit of {limit}")]
    MaxRoundsExceeded { limit: u64 },
    #[error("local send from {from} to {to}: no such edge")]
    IllegalLocalEdge { from: NodeId, to: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Channel {
    Local,
    Global,
}

/// Local-edge capacity per round: the default model places no bound, the
/// bounded mode carries `lambda` words per edge direction per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    Unbounded,
    Bounded(u32),
}

/// Which words the adversary removes when a budget is exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropPolicy {
    /// Keep the earliest words that fit, drop later ones.
    DropNewest,
    /// Keep the latest words that fit, drop earlier ones.
    DropOldest,
    /// Remove uniformly at random, seeded per round and node.
    DropRandom,
}

#[derive(Debug, Clone)]
pub struct HybridConfig {
    pub lambda: LambdaMode,
    /// Global budget multiplier: `gamma = ceil(gamma_const * log2 n)`.
    pub gamma_const: f64,
    pub drop_policy: DropPolicy,
    pub seed: u64,
    /// Replication multiplier for the tiered-round scatter.
    pub sampler_const: f64,
    /// Skeleton radius multiplier: `h = ceil(h_const * n^{1-x} * ln n)`.
    pub h_const: f64,
    /// Density threshold multiplier for the source classifier.
    pub theta: f64,
}

impl HybridConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            lambda: LambdaMode::Unbounded,
            gamma_const: 4.0,
            drop_policy: DropPolicy::DropNewest,
            seed,
            sampler_const: 2.0,
            h_const: 2.0,
            theta: 1.0,
        }
    }

    /// CONGEST semantics: one word per local edge per round, no global channel.
    pub fn congest(seed: u64) -> Self {
        Self {
            gamma_const: 0.0,
            lambda: LambdaMode::Bounded(1),
            ..Self::new(seed)
        }
    }

    pub fn gamma(&self, n: u32) -> u32 {
        (self.gamma_const * (n.max(2) as f64).log2()).ceil() as u32
    }
}

/// One addressed message. `words` is the number of model messages the
/// envelope counts as: senders set it to the number of O(log n)-bit units
/// they are transmitting, independently of how the payload is encoded host
/// side. A single record of ids and one distance is one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: NodeId,
    pub to: NodeId,
    pub channel: Channel,
    pub payload: Vec<u64>,
    pub words: u32,
}

impl Envelope {
    pub fn local(from: NodeId, to: NodeId, payload: Vec<u64>) -> Self {
        Self {
            from,
            to,
            channel: Channel::Local,
            payload,
            words: 1,
        }
    }

    pub fn global(from: NodeId, to: NodeId, payload: Vec<u64>) -> Self {
        Self {
            from,
            to,
            channel: Channel::Global,
            payload,
            words: 1,
        }
    }

    pub fn with_words(mut self, words: u32) -> Self {
        assert!(words >= 1, "an envelope carries at least one word");
        self.words = words;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseStats {
    pub rounds: u64,
    pub local_msgs: u64,
    pub global_msgs: u64,
    pub drops: u64,
}

/// Per-phase counters in first-use order.
#[derive(Debug, Clone, Default)]
pub struct RoundLedger {
    phases: Vec<(String, PhaseStats)>,
}

impl RoundLedger {
    fn stats_mut(&mut self, phase: &str) -> &mut PhaseStats {
        if let Some(i) = self.phases.iter().position(|(name, _)| name == phase) {
            &mut self.phases[i].1
        } else {
            self.phases.push((phase.to_string(), PhaseStats::default()));
            &mut self.phases.last_mut().unwrap().1
        }
    }

    pub fn phases(&self) -> impl Iterator<Item = (&str, &PhaseStats)> {
        self.phases.iter().map(|(n, s)| (n.as_str(), s))
    }

    pub fn phase(&self, name: &str) -> Option<&PhaseStats> {
        self.phases
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    pub fn total_rounds(&self) -> u64 {
        self.phases.iter().map(|(_, s)| s.rounds).sum()
    }

    pub fn total_drops(&self) -> u64 {
        self.phases.iter().map(|(_, s)| s.drops).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,rounds,localMsgs,globalMsgs,drops\n");
        for (name, s) in &self.phases {
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                s.rounds, s.local_msgs, s.global_msgs, s.drops
            ));
        }
        out
    }
}

/// One delivered message in the transcript: `round` is the round in which
/// the send happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptEvent {
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub channel: Channel,
    pub words: u32,
}

pub struct Sim<'g> {
    g: &'g WeightedGraph,
    cfg: HybridConfig,
    gamma: u32,
    round: u64,
    phase: String,
    phase_locks: u32,
    ledger: RoundLedger,
    transcript: Option<Vec<TranscriptEvent>>,
}

impl<'g> Sim<'g> {
    pub fn new(g: &'g WeightedGraph, cfg: HybridConfig) -> Self {
        let gamma = cfg.gamma(g.n());
        Self {
            g,
            cfg,
            gamma,
            round: 0,
            phase: "main".to_string(),
            phase_locks: 0,
            ledger: RoundLedger::default(),
            transcript: None,
        }
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.g
    }

    pub fn config(&self) -> &HybridConfig {
        &self.cfg
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn current_round(&self) -> u64 {
        self.round
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    /// Labels all following rounds until the next call. Ignored while a
    /// scoped phase holds the label, so composite protocols keep their own
    /// name over the primitives they run.
    pub fn set_phase(&mut self, label: &str) {
        if self.phase_locks == 0 {
            self.phase = label.to_string();
        }
    }

    /// Runs `f` with the phase pinned to `label`; inner set_phase calls are
    /// ignored, nested scopes keep the outermost label, and the previous
    /// phase is restored afterwards.
    pub fn scoped_phase<T>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = if self.phase_locks == 0 {
            Some(std::mem::replace(&mut self.phase, label.to_string()))
        } else {
            None
        };
        self.phase_locks += 1;
        let out = f(self);
        self.phase_locks -= 1;
        if let Some(saved) = saved {
            self.phase = saved;
        }
        out
    }

    pub fn enable_transcript(&mut self) {
        if self.transcript.is_none() {
            self.transcript = Some(Vec::new());
        }
    }

    pub fn transcript(&self) -> Option<&[TranscriptEvent]> {
        self.transcript.as_deref()
    }

    /// Charges `rounds` rounds carrying `local_msgs` local words in bulk and
    /// nothing else. Used by flood-style protocols whose local traffic is
    /// accounted arithmetically.
    pub fn advance(&mut self, rounds: u64, local_msgs: u64) {
        self.round += rounds;
        let stats = self.ledger.stats_mut(&self.phase);
        stats.rounds += rounds;
        stats.local_msgs += local_msgs;
    }

    /// Runs one synchronous round: takes every envelope sent this round plus
    /// a bulk local word count, applies capacities, and returns what arrives
    /// at the start of the next round, ordered by (sender, emission index).
    pub fn round(
        &mut self,
        sends: Vec<Envelope>,
        bulk_local_msgs: u64,
    ) -> Result<Vec<Envelope>, EngineError> {
        self.round += 1;
        let round = self.round;

        let mut local = Vec::new();
        let mut global = Vec::new();
        for (seq, env) in sends.into_iter().enumerate() {
            assert!(env.words >= 1, "zero-word envelope from {}", env.from);
            assert!(env.to < self.g.n() && env.from < self.g.n());
            match env.channel {
                Channel::Local => {
                    if !self.g.has_edge(env.from, env.to) {
                        return Err(EngineError::IllegalLocalEdge {
                            from: env.from,
                            to: env.to,
                        });
                    }
                    local.push((seq, env));
                }
                Channel::Global => global.push((seq, env)),
            }
        }

        let mut sent_local: u64 = bulk_local_msgs;
        let mut sent_global: u64 = 0;
        let mut drops: u64 = 0;

        for (_, env) in &local {
            sent_local += u64::from(env.words);
        }
        for (_, env) in &global {
            sent_global += u64::from(env.words);
        }

        // Local capacity: per directed edge per round.
        let delivered_local = match self.cfg.lambda {
            LambdaMode::Unbounded => local,
            LambdaMode::Bounded(lambda) => {
                local.sort_by_key(|(seq, env)| (env.from, env.to, *seq));
                let (kept, d) = self.enforce(
                    round,
                    local,
                    lambda,
                    "edge",
                    |e| (u64::from(e.from), u64::from(e.to)),
                );
                drops += d;
                kept
            }
        };

        // Global send budget per sender. Emission order is already grouped
        // by sender because callers append per node.
        global.sort_by_key(|(seq, env)| (env.from, *seq));
        let (after_send, d) =
            self.enforce(round, global, self.gamma, "send", |e| (u64::from(e.from), 0));
        drops += d;

        // Global receive budget per receiver, in (sender, emission) order.
        let mut after_send = after_send;
        after_send.sort_by_key(|(seq, env)| (env.to, env.from, *seq));
        let (delivered_global, d) =
            self.enforce(round, after_send, self.gamma, "recv", |e| {
                (u64::from(e.to), 0)
            });
        drops += d;

        let stats = self.ledger.stats_mut(&self.phase);
        stats.rounds += 1;
        stats.local_msgs += sent_local;
        stats.global_msgs += sent_global;
        stats.drops += drops;

        let mut delivered: Vec<(usize, Envelope)> = delivered_local;
        delivered.extend(delivered_global);
        delivered.sort_by_key(|(seq, env)| (env.from, *seq));

        if let Some(events) = &mut self.transcript {
            events.extend(delivered.iter().map(|(_, env)| TranscriptEvent {
                round,
                from: env.from,
                to: env.to,
                channel: env.channel,
                words: env.words,
            }));
        }

        Ok(delivered.into_iter().map(|(_, env)| env).collect())
    }

    /// Applies a word budget to every group of consecutive envelopes sharing
    /// a group key. `envs` must already be sorted so groups are contiguous
    /// and within-group order is emission order. Returns the surviving
    /// envelopes (original order preserved) and the number of dropped words.
    fn enforce(
        &self,
        round: u64,
        envs: Vec<(usize, Envelope)>,
        budget: u32,
        stage: &str,
        key: impl Fn(&Envelope) -> (u64, u64),
    ) -> (Vec<(usize, Envelope)>, u64) {
        let mut keep = vec![true; envs.len()];
        let mut drops: u64 = 0;
        let mut start = 0;
        while start < envs.len() {
            let k = key(&envs[start].1);
            let mut end = start + 1;
            while end < envs.len() && key(&envs[end].1) == k {
                end += 1;
            }
            let total: u64 = envs[start..end].iter().map(|(_, e)| u64::from(e.words)).sum();
            if total > u64::from(budget) {
                let mut order: Vec<usize> = (start..end).collect();
                match self.cfg.drop_policy {
                    DropPolicy::DropNewest => {}
                    DropPolicy::DropOldest => order.reverse(),
                    DropPolicy::DropRandom => {
                        let seed = derive_seed(
                            derive_seed(self.cfg.seed, "adversary", round),
                            stage,
                            k.0 << 32 | k.1,
                        );
                        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                    }
                }
                for i in start..end {
                    keep[i] = false;
                }
                let mut used: u64 = 0;
                for idx in order {
                    let w = u64::from(envs[idx].1.words);
                    if used + w <= u64::from(budget) {
                        used += w;
                        keep[idx] = true;
                    } else {
                        drops += w;
                    }
                }
            }
            start = end;
        }
        let kept = envs
            .into_iter()
            .zip(keep)
            .filter_map(|(e, k)| k.then_some(e))
            .collect();
        (kept, drops)
    }
}

/// Outcome of one program step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Active,
    Halted,
}

/// Per-round view and send interface handed to a node program.
pub struct StepCtx<'a> {
    pub node: NodeId,
    pub round: u64,
    pub n: u32,
    pub gamma: u32,
    pub inbox: &'a [Envelope],
    pub rng: &'a mut ChaCha8Rng,
    out: &'a mut Vec<Envelope>,
}

impl StepCtx<'_> {
    pub fn send_local(&mut self, to: NodeId, payload: Vec<u64>) {
        self.out.push(Envelope::local(self.node, to, payload));
    }

    pub fn send_global(&mut self, to: NodeId, payload: Vec<u64>) {
        self.out.push(Envelope::global(self.node, to, payload));
    }

    pub fn send_global_words(&mut self, to: NodeId, payload: Vec<u64>, words: u32) {
        self.out
            .push(Envelope::global(self.node, to, payload).with_words(words));
    }
}

/// A synchronous per-node protocol. `step` runs once per round; a node that
/// returns [`Status::Halted`] is never stepped again and later deliveries to
/// it are discarded.
pub trait NodeProgram {
    fn step(&mut self, ctx: &mut StepCtx) -> Status;
}

/// Drives one program per node until every node halts. Returns the number of
/// charged rounds. A final round in which all nodes halt without sending is
/// free: it only reads the last deliveries.
pub fn run_hybrid(
    sim: &mut Sim,
    mut programs: Vec<Box<dyn NodeProgram>>,
    max_rounds: u64,
) -> Result<u64, EngineError> {
    let n = sim.graph().n();
    assert_eq!(programs.len(), n as usize, "one program per node");
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|v| {
            ChaCha8Rng::seed_from_u64(derive_seed(
                sim.config().seed,
                "node-program",
                u64::from(v),
            ))
        })
        .collect();

    let mut active: Vec<bool> = vec![true; n as usize];
    let mut inboxes: Vec<Vec<Envelope>> = vec![Vec::new(); n as usize];
    let mut rounds_used = 0u64;

    for round in 0.. {
        let mut sends = Vec::new();
        let mut any_active = false;
        for v in 0..n as usize {
            if !active[v] {
                continue;
            }
            let inbox = std::mem::take(&mut inboxes[v]);
            let mut ctx = StepCtx {
                node: v as NodeId,
                round,
                n,
                gamma: sim.gamma(),
                inbox: &inbox,
                rng: &mut rngs[v],
                out: &mut sends,
            };
            if programs[v].step(&mut ctx) == Status::Halted {
                active[v] = false;
            } else {
                any_active = true;
            }
        }

        if !any_active && sends.is_empty() {
            return Ok(rounds_used);
        }
        if rounds_used == max_rounds {
            return Err(EngineError::MaxRoundsExceeded { limit: max_rounds });
        }
        let delivered = sim.round(sends, 0)?;
        rounds_used += 1;
        if !any_active {
            return Ok(rounds_used);
        }
        for env in delivered {
            if active[env.to as usize] {
                inboxes[env.to as usize].push(env);
            }
        }
    }
    unreachable!()
}

/// What a node knows after `h` rounds of local flooding: the nodes of its
/// hop-`h` ball, the edges running between them, and any annotation words
/// those nodes carried. `nodes` ascends and `hops` is parallel to it;
/// `edges` is the induced subgraph with endpoints ordered low to high.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: NodeId,
    pub h: u32,
    pub nodes: Vec<NodeId>,
    pub hops: Vec<u32>,
    pub edges: Vec<(NodeId, NodeId, Weight)>,
    pub annotations: Vec<(NodeId, Vec<u64>)>,
}

/// Floods `v`'s radius-`h` neighborhood over the local channel and returns
/// the knowledge set. Charges exactly `h` rounds; the word count is the
/// unicast envelope in which every ball node's announcement (itself, its
/// incident edges, its annotation words) travels the full `h` hops.
pub fn broadcast_local_neighborhood(
    sim: &mut Sim,
    v: NodeId,
    h: u32,
    annotations: &[Vec<u64>],
) -> Neighborhood {
    let g = sim.graph();
    assert!(h >= 1, "a flood covers at least the direct neighbors");
    assert!(v < g.n());
    assert!(annotations.is_empty() || annotations.len() == g.n() as usize);

    let mut hop = vec![u32::MAX; g.n() as usize];
    let mut ball = vec![v];
    let mut queue = std::collections::VecDeque::from([v]);
    hop[v as usize] = 0;
    while let Some(u) = queue.pop_front() {
        if hop[u as usize] == h {
            continue;
        }
        for &(w, _) in g.neighbors(u) {
            if hop[w as usize] == u32::MAX {
                hop[w as usize] = hop[u as usize] + 1;
                ball.push(w);
                queue.push_back(w);
            }
        }
    }
    ball.sort_unstable();

    let mut edges = Vec::new();
    let mut words: u64 = 0;
    for &u in &ball {
        let ann = annotations.get(u as usize).map_or(0, Vec::len) as u64;
        words += 1 + g.degree(u) as u64 + ann;
        for &(w, weight) in g.neighbors(u) {
            if u < w && hop[w as usize] != u32::MAX {
                edges.push((u, w, weight));
            }
        }
    }
    edges.sort_unstable();
    sim.advance(u64::from(h), words * u64::from(h));

    let hops = ball.iter().map(|&u| hop[u as usize]).collect();
    let annotations = ball
        .iter()
        .filter_map(|&u| {
            let ann = annotations.get(u as usize)?;
            (!ann.is_empty()).then(|| (u, ann.clone()))
        })
        .collect();
    Neighborhood {
        center: v,
        h,
        nodes: ball,
        hops,
        edges,
        annotations,
    }
}
