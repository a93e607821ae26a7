//! One member-to-member unicast round, simulated loss-free over the global
//! channel.
//!
//! With the member list globally known, the word for the pair (i, j) is
//! routed through the relay node `(i*m + j) mod n`. For m <= n a relay
//! serves at most one pair per sender, and in total at most
//! `ceil(m^2/n) + 1` pairs, which fits the global budget at every scale the
//! schedules are designed for; senders pace their outgoing words in windows
//! of gamma and relays forward in windows keyed by sender index, so no
//! round ever exceeds a send or receive budget. When the per-relay total
//! would exceed gamma, senders are additionally serialized into batches.

use std::collections::HashSet;

use thiserror::Error;

use crate::engine::{EngineError, Envelope, Sim};
use crate::graph::NodeId;

/// A single word addressed between member indices. The body is the host
/// encoding of one O(log n)-bit unit; its length does not change the cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcMessage {
    pub from: usize,
    pub to: usize,
    pub body: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum CcSimError {
    #[error("pair ({from}, {to}) carries more than one word")]
    PayloadTooLarge { from: usize, to: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Delivers every message to its member; returns one inbox per member index
/// holding (sender index, body) sorted by sender. Charged under `cc-sim`.
pub fn cc_sim_round(
    sim: &mut Sim,
    members: &[NodeId],
    messages: Vec<CcMessage>,
) -> Result<Vec<Vec<(usize, Vec<u64>)>>, CcSimError> {
    let m = members.len();
    let n = sim.graph().n() as usize;
    let gamma = sim.gamma() as usize;
    assert!(gamma >= 1, "member unicast needs a global channel");
    assert!(m <= n);
    sim.set_phase("cc-sim");

    let mut seen = HashSet::new();
    for msg in &messages {
        assert!(msg.from < m && msg.to < m && msg.from != msg.to);
        if !seen.insert((msg.from, msg.to)) {
            return Err(CcSimError::PayloadTooLarge {
                from: msg.from,
                to: msg.to,
            });
        }
    }

    let mut inboxes = vec![Vec::new(); m];
    if m <= 1 {
        return Ok(inboxes);
    }

    // Send windows per phase; index pacing caps every budget because a
    // relay holds at most one pair per sender when m <= n.
    let windows_in = (m - 1).div_ceil(gamma);
    let windows_out = m.div_ceil(gamma);
    let relay_total = (m * m).div_ceil(n) + 1;
    let batches = relay_total.div_ceil(gamma).max(1);

    // Sender lists in ascending receiver order fix each word's send round.
    let mut by_sender: Vec<Vec<(usize, Vec<u64>)>> = vec![Vec::new(); m];
    for msg in messages {
        by_sender[msg.from].push((msg.to, msg.body));
    }
    for list in &mut by_sender {
        list.sort_unstable();
    }

    let relay_of = |i: usize, j: usize| ((i * m + j) % n) as NodeId;

    // Phase 1: words travel to their relays.
    let mut held: Vec<Vec<CcMessage>> = vec![Vec::new(); n];
    let drops_before = sim.ledger().total_drops();
    for batch in 0..batches {
        for window in 0..windows_in {
            let mut sends = Vec::new();
            for (i, list) in by_sender.iter().enumerate() {
                if i % batches != batch {
                    continue;
                }
                for (q, (j, body)) in list.iter().enumerate() {
                    if q / gamma == window {
                        let mut payload = vec![i as u64, *j as u64];
                        payload.extend_from_slice(body);
                        sends.push(Envelope::global(members[i], relay_of(i, *j), payload));
                    }
                }
            }
            for env in sim.round(sends, 0)? {
                held[env.to as usize].push(CcMessage {
                    from: env.payload[0] as usize,
                    to: env.payload[1] as usize,
                    body: env.payload[2..].to_vec(),
                });
            }
        }
    }

    // Phase 2: relays forward, paced by sender index.
    for window in 0..windows_out {
        let mut sends = Vec::new();
        for (r, list) in held.iter().enumerate() {
            for msg in list {
                if msg.from / gamma == window {
                    let mut payload = vec![msg.from as u64, msg.to as u64];
                    payload.extend_from_slice(&msg.body);
                    sends.push(Envelope::global(r as NodeId, members[msg.to], payload));
                }
            }
        }
        for env in sim.round(sends, 0)? {
            inboxes[env.payload[1] as usize]
                .push((env.payload[0] as usize, env.payload[2..].to_vec()));
        }
    }

    assert_eq!(
        sim.ledger().total_drops(),
        drops_before,
        "the relay schedule is loss-free"
    );
    for inbox in &mut inboxes {
        inbox.sort_unstable();
    }
    Ok(inboxes)
}
