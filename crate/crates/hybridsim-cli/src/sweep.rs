//! Scaling sweeps: rerun one scenario while the graph size or the token
//! count grows, take the median rounds per size and fit a log-log slope.

use anyhow::{bail, Context, Result};

use crate::runner::{run_seed, RunOutput, SeedOutcome};
use crate::scenario::{Algo, GraphSpec, Scenario, Sweep};

/// Transcripts are only kept up to this size: a token sweep at the top
/// size delivers tens of millions of envelopes, and the audit on the
/// smaller sizes already exercises every capacity path.
const AUDIT_MAX_SIZE: u64 = 2048;

#[derive(Debug, Clone)]
pub struct SizePoint {
    pub size: u64,
    pub median_rounds: u64,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub scenario: String,
    pub points: Vec<SizePoint>,
    pub slope: f64,
    /// One RunOutput per size, for the csv writers.
    pub outputs: Vec<RunOutput>,
}

fn resize(spec: &GraphSpec, size: u32, avg_degree: f64) -> Result<GraphSpec> {
    Ok(match *spec {
        GraphSpec::ErdosRenyi { .. } => {
            let p = (avg_degree / f64::from(size.saturating_sub(1).max(1))).min(1.0);
            GraphSpec::ErdosRenyi { n: size, p }
        }
        GraphSpec::Path { .. } => GraphSpec::Path { n: size },
        GraphSpec::Grid { .. } => GraphSpec::Grid { n: size },
        GraphSpec::Star { .. } => GraphSpec::Star { n: size },
        GraphSpec::Lollipop { .. } => GraphSpec::Lollipop { n: size, clique: size / 2 },
        GraphSpec::Geometric { .. } => {
            // Expected degree of a unit-square geometric graph is about
            // pi r^2 n; solve for r.
            let r = (avg_degree / (std::f64::consts::PI * f64::from(size))).sqrt();
            GraphSpec::Geometric { n: size, radius: r }
        }
        GraphSpec::LowerBound { .. } | GraphSpec::File(_) => {
            bail!("this graph family does not resize for sweeps")
        }
    })
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2
    }
}

/// Rounds metric for one run. Token sweeps measure the dissemination
/// phase itself so the completeness aggregates do not flatten the fit.
fn metric(algo: Algo, o: &SeedOutcome) -> u64 {
    if algo == Algo::TokenDissemination {
        o.phases
            .iter()
            .find(|(name, _)| name == "td")
            .map_or(o.rounds, |(_, st)| st.rounds)
    } else {
        o.rounds
    }
}

/// Plain least-squares slope through (ln x, ln y).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in points {
        sx += x.ln();
        sy += y.ln();
    }
    let (mx, my) = (sx / k, sy / k);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx) * (x.ln() - mx);
    }
    num / den
}

/// Runs the sweep attached to `sc`. Seeds run sequentially per size; the
/// algorithms parallelize internally and the top sizes are memory-heavy.
pub fn run_sweep(sc: &Scenario, transcript: bool) -> Result<SweepRun> {
    let sweep = sc.sweep.as_ref().context("scenario has no sweep keys")?;

    let (sizes, seeds_per): (Vec<u64>, usize) = match sweep {
        Sweep::Sizes { sizes, seeds_per, .. } => {
            (sizes.iter().map(|&s| u64::from(s)).collect(), *seeds_per)
        }
        Sweep::Tokens { counts, seeds_per } => {
            (counts.iter().map(|&c| c as u64).collect(), *seeds_per)
        }
    };

    let mut points = Vec::new();
    let mut outputs = Vec::new();
    for &size in &sizes {
        let mut sub = sc.clone();
        sub.sweep = None;
        sub.seeds = (1..=seeds_per as u64).collect();
        match sweep {
            Sweep::Sizes { avg_degree, .. } => {
                sub.graph = resize(&sc.graph, size as u32, *avg_degree)?;
                sub.name = format!("{}:n={}", sc.name, size);
            }
            Sweep::Tokens { .. } => {
                sub.k = size as usize;
                sub.name = format!("{}:k={}", sc.name, size);
            }
        }
        let audit = transcript && size <= AUDIT_MAX_SIZE;
        let mut outcomes = Vec::new();
        for &seed in &sub.seeds {
            outcomes.push(
                run_seed(&sub, seed, audit)
                    .with_context(|| format!("{} seed {seed}", sub.name))?,
            );
        }
        let rounds: Vec<u64> = outcomes.iter().map(|o| metric(sc.algorithm, o)).collect();
        points.push(SizePoint {
            size,
            median_rounds: median(rounds),
        });
        outputs.push(RunOutput {
            scenario: sub.name,
            outcomes,
        });
    }

    let fit: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.size as f64, p.median_rounds.max(1) as f64))
        .collect();
    Ok(SweepRun {
        scenario: sc.name.clone(),
        points,
        slope: loglog_slope(&fit),
        outputs,
    })
}

/// Per-size table plus the fitted slope, appended to summary.txt.
pub fn sweep_summary(run: &SweepRun) -> String {
    let mut out = format!("sweep {}\n  size -> median rounds\n", run.scenario);
    for p in &run.points {
        out.push_str(&format!("  {:>8} -> {}\n", p.size, p.median_rounds));
    }
    out.push_str(&format!("  slope = {:.4}\n", run.slope));
    out
}
