//! Aggregate-and-broadcast over the global channel.
//!
//! Nodes form a static binary tree by identifier (parent of `i` is
//! `(i-1)/2`). Values combine upward level by level, then the root's result
//! is forwarded back down, so the whole exchange takes about `2 log2 n`
//! rounds and `2(n-1)` global words. Every node sends at most two words in a
//! round, which stays inside the global budget for any `gamma >= 2`.

use std::cell::RefCell;
use std::rc::Rc;

use crate::engine::{run_hybrid, EngineError, NodeProgram, Sim, Status, StepCtx};
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggOp {
    Sum,
    Min,
    Max,
    And,
    Or,
}

impl AggOp {
    pub fn combine(self, a: u64, b: u64) -> u64 {
        match self {
            AggOp::Sum => a.wrapping_add(b),
            AggOp::Min => a.min(b),
            AggOp::Max => a.max(b),
            AggOp::And => u64::from(a != 0 && b != 0),
            AggOp::Or => u64::from(a != 0 || b != 0),
        }
    }
}

struct TreeNode {
    op: AggOp,
    depth: u64,
    max_depth: u64,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    acc: u64,
    results: Rc<RefCell<Vec<Option<u64>>>>,
}

impl NodeProgram for TreeNode {
    fn step(&mut self, ctx: &mut StepCtx) -> Status {
        for env in ctx.inbox {
            self.acc = self.op.combine(self.acc, env.payload[0]);
        }
        let up_round = self.max_depth - self.depth;
        if ctx.round == up_round {
            match self.parent {
                Some(p) => {
                    ctx.send_global(p, vec![self.acc]);
                    return Status::Active;
                }
                None => {
                    // Root: the fold is complete, start the broadcast.
                    self.results.borrow_mut()[ctx.node as usize] = Some(self.acc);
                    for &c in &self.children {
                        ctx.send_global(c, vec![self.acc]);
                    }
                    return Status::Halted;
                }
            }
        }
        if self.parent.is_some() && ctx.round == self.max_depth + self.depth {
            let result = ctx.inbox.last().expect("broadcast value").payload[0];
            self.results.borrow_mut()[ctx.node as usize] = Some(result);
            for &c in &self.children {
                ctx.send_global(c, vec![result]);
            }
            return Status::Halted;
        }
        Status::Active
    }
}

/// Folds one value per node with `op` and returns the result every node
/// learned. Charged under the phase label `agg`.
pub fn aggregate_and_broadcast(
    sim: &mut Sim,
    values: &[u64],
    op: AggOp,
) -> Result<u64, EngineError> {
    let n = sim.graph().n();
    assert_eq!(values.len(), n as usize);
    if n == 1 {
        return Ok(values[0]);
    }
    assert!(sim.gamma() >= 2, "tree broadcast needs a global budget of 2");
    sim.set_phase("agg");

    let depth_of = |i: u32| u64::from(u32::BITS - (i + 1).leading_zeros() - 1);
    let max_depth = depth_of(n - 1);
    let results = Rc::new(RefCell::new(vec![None; n as usize]));
    let programs: Vec<Box<dyn NodeProgram>> = (0..n)
        .map(|i| {
            Box::new(TreeNode {
                op,
                depth: depth_of(i),
                max_depth,
                parent: i.checked_sub(1).map(|j| j / 2),
                children: [2 * i + 1, 2 * i + 2]
                    .into_iter()
                    .filter(|&c| c < n)
                    .collect(),
                acc: values[i as usize],
                results: Rc::clone(&results),
            }) as Box<dyn NodeProgram>
        })
        .collect();

    run_hybrid(sim, programs, 4 * u64::from(n.ilog2() + 2))?;

    let results = results.borrow();
    let root = results[0].expect("root result");
    debug_assert!(results.iter().all(|r| *r == Some(root)));
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::HybridConfig;
    use crate::gen;

    fn fold(values: &[u64], op: AggOp) -> u64 {
        let mut it = values.iter().copied();
        let first = it.next().unwrap();
        it.fold(first, |a, b| op.combine(a, b))
    }

    #[test]
    fn matches_centralized_fold_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let g = gen::erdos_renyi(100, 0.06, 1, 5, 4).unwrap();
        let ops = [AggOp::Sum, AggOp::Min, AggOp::Max, AggOp::And, AggOp::Or];
        for trial in 0..50 {
            let values: Vec<u64> = (0..100)
                .map(|_| {
                    if trial % 3 == 0 {
                        rng.gen_range(0..2)
                    } else {
                        rng.gen_range(0..1_000_000)
                    }
                })
                .collect();
            let op = ops[trial % ops.len()];
            let mut sim = Sim::new(&g, HybridConfig::new(trial as u64));
            let got = aggregate_and_broadcast(&mut sim, &values, op).unwrap();
            assert_eq!(got, fold(&values, op), "trial {trial}");
        }
    }

    #[test]
    fn round_count_is_logarithmic() {
        for n in [64u32, 100, 512, 1000] {
            let g = gen::path(n, 1, 1, 0).unwrap();
            let values: Vec<u64> = (0..u64::from(n)).collect();
            let mut sim = Sim::new(&g, HybridConfig::new(7));
            let got = aggregate_and_broadcast(&mut sim, &values, AggOp::Max).unwrap();
            assert_eq!(got, u64::from(n) - 1);
            let stats = sim.ledger().phase("agg").unwrap();
            let bound = 2 * u64::from((n as f64).log2().ceil() as u32) + 2;
            assert!(stats.rounds <= bound, "n={n} rounds={}", stats.rounds);
            assert_eq!(stats.global_msgs, 2 * (u64::from(n) - 1));
            assert_eq!(stats.drops, 0);
        }
    }

    #[test]
    fn single_node_needs_no_rounds() {
        let g = gen::path(1, 1, 1, 0).unwrap();
        let mut sim = Sim::new(&g, HybridConfig::new(0));
        assert_eq!(
            aggregate_and_broadcast(&mut sim, &[42], AggOp::Sum).unwrap(),
            42
        );
        assert_eq!(sim.ledger().total_rounds(), 0);
    }

    #[test]
    fn and_or_treat_values_as_flags() {
        assert_eq!(AggOp::And.combine(3, 1), 1);
        assert_eq!(AggOp::And.combine(3, 0), 0);
        assert_eq!(AggOp::Or.combine(0, 0), 0);
        assert_eq!(AggOp::Or.combine(0, 7), 1);
    }
}
