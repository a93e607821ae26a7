//! Helper assignment: skeleton members adopt target nodes so that every
//! target ends up with at least one member speaking for it while no
//! member serves two targets at once.
//!
//! Targets announce themselves with an h-hop flood. Each member then
//! flips one coin per visible target at rate 1/|A| and commits only when
//! exactly one coin comes up, which caps its load at one by construction;
//! an aggregate confirms full coverage or the coins are redrawn.

use crate::engine::Sim;
use crate::flood::flood_sources;
use crate::graph::{NodeId, INF};
use crate::primitives::{aggregate_and_broadcast, AggOp};
use crate::skeleton::SkeletonGraph;
use crate::{derive_seed, splitmix64};

use super::AlgoError;

#[derive(Debug)]
pub struct Assignment {
    /// Per member: the index into the target list it adopted, if any.
    pub member_to_target: Vec<Option<usize>>,
    pub attempts: u32,
}

pub fn reassign(
    sim: &mut Sim,
    skel: &SkeletonGraph,
    targets: &[NodeId],
    max_attempts: u32,
) -> Result<Assignment, AlgoError> {
    let m = skel.m();
    if targets.is_empty() {
        return Ok(Assignment {
            member_to_target: vec![None; m],
            attempts: 0,
        });
    }
    let n = sim.graph().n();
    let seed = sim.config().seed;
    let salt = sim.current_round();

    sim.scoped_phase("reassign", |sim| {
        // The target count sets the coin rate, so it becomes common
        // knowledge first.
        let mut ind = vec![0u64; n as usize];
        for &t in targets {
            ind[t as usize] = 1;
        }
        let a_count = aggregate_and_broadcast(sim, &ind, AggOp::Sum)?;
        assert_eq!(a_count as usize, targets.len(), "duplicate targets");
        let rate = 1.0 / a_count as f64;

        let (tdist, words) = flood_sources(sim.graph(), skel.h, targets);
        sim.advance(u64::from(skel.h), words);

        let base = derive_seed(seed, "reassign", salt);
        for attempt in 0..max_attempts {
            let aseed = derive_seed(base, "attempt", u64::from(attempt));
            let mut member_to_target = vec![None; m];
            let mut covered = vec![false; targets.len()];
            let mut assigned = 0u64;

            for (i, &mv) in skel.members.iter().enumerate() {
                let mut chosen = None;
                let mut hits = 0u32;
                for q in 0..targets.len() {
                    if tdist.get(q, mv) == INF {
                        continue;
                    }
                    let coin = splitmix64(derive_seed(
                        aseed,
                        "adopt",
                        (i as u64) << 32 | q as u64,
                    ));
                    if (coin as f64 / u64::MAX as f64) < rate {
                        hits += 1;
                        chosen = Some(q);
                    }
                }
                if hits == 1 {
                    let q = chosen.expect("a single hit names its target");
                    member_to_target[i] = Some(q);
                    covered[q] = true;
                    assigned += 1;
                }
            }

            // Adopters notify their targets back across at most h hops.
            sim.advance(u64::from(skel.h), assigned * u64::from(skel.h));

            let mut got = vec![1u64; n as usize];
            for (q, &t) in targets.iter().enumerate() {
                got[t as usize] = u64::from(covered[q]);
            }
            if aggregate_and_broadcast(sim, &got, AggOp::And)? == 1 {
                return Ok(Assignment {
                    member_to_target,
                    attempts: attempt + 1,
                });
            }
        }
        Err(AlgoError::AssignmentDeficit {
            attempts: max_attempts,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;
    use crate::skeleton::{build_skeleton, h_for, sample_marks};

    #[test]
    fn every_target_gets_a_helper_and_loads_stay_single() {
        let g = gen::erdos_renyi(200, 0.06, 1, 9, 31).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(31));
        let x = 2.0 / 3.0;
        let h = h_for(200, x, 2.0);
        let skel = build_skeleton(&mut sim, x, h, sample_marks(200, x, 5, &[]));

        let targets = [0, 50, 150];
        let assign = reassign(&mut sim, &skel, &targets, 6).unwrap();
        let mut load = vec![0usize; targets.len()];
        for (i, t) in assign.member_to_target.iter().enumerate() {
            if let Some(q) = *t {
                load[q] += 1;
                assert_ne!(skel.mark_dists.get(i, targets[q]), INF);
            }
        }
        assert!(load.iter().all(|&c| c >= 1), "loads {load:?}");
        assert!(assign.attempts <= 6);
        assert_eq!(sim.ledger().total_drops(), 0);
    }

    #[test]
    fn invisible_targets_exhaust_the_attempt_budget() {
        let g = gen::path(50, 1, 1, 3).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(3));
        let skel = build_skeleton(&mut sim, 0.5, 2, vec![0, 1]);
        match reassign(&mut sim, &skel, &[49], 3) {
            Err(AlgoError::AssignmentDeficit { attempts: 3 }) => {}
            other => panic!("expected a deficit, got {other:?}"),
        }
    }
}
