//! Scenario files: flat `key = value` lines, one scenario per file,
//! `#` starts a comment. Unknown keys are rejected so a typo fails the
//! parse instead of silently running with a default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Everything the runner can execute. Names in scenario files use the
/// camelCase form, e.g. `algorithm = hybridExactSSSP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    HybridExactSssp,
    TieredApsp,
    SkeletonApsp,
    Rssp,
    ExactN13Ssp,
    ApproxMssp,
    EccWeighted,
    EccUnweighted,
    DiameterWeighted,
    DiameterUnweighted,
    TokenDissemination,
    SkeletonProperties,
    OracleSim,
    TieredSim,
    LowerBoundCheck,
}

impl Algo {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "hybridExactSSSP" => Algo::HybridExactSssp,
            "tieredAPSP" => Algo::TieredApsp,
            "skeletonAPSP" => Algo::SkeletonApsp,
            "rssp" => Algo::Rssp,
            "exactN13SSP" => Algo::ExactN13Ssp,
            "approxMSSP" => Algo::ApproxMssp,
            "eccWeighted" => Algo::EccWeighted,
            "eccUnweighted" => Algo::EccUnweighted,
            "diameterWeighted" => Algo::DiameterWeighted,
            "diameterUnweighted" => Algo::DiameterUnweighted,
            "tokenDissemination" => Algo::TokenDissemination,
            "skeletonProperties" => Algo::SkeletonProperties,
            "oracleSim" => Algo::OracleSim,
            "tieredSim" => Algo::TieredSim,
            "lowerBoundCheck" => Algo::LowerBoundCheck,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::HybridExactSssp => "hybridExactSSSP",
            Algo::TieredApsp => "tieredAPSP",
            Algo::SkeletonApsp => "skeletonAPSP",
            Algo::Rssp => "rssp",
            Algo::ExactN13Ssp => "exactN13SSP",
            Algo::ApproxMssp => "approxMSSP",
            Algo::EccWeighted => "eccWeighted",
            Algo::EccUnweighted => "eccUnweighted",
            Algo::DiameterWeighted => "diameterWeighted",
            Algo::DiameterUnweighted => "diameterUnweighted",
            Algo::TokenDissemination => "tokenDissemination",
            Algo::SkeletonProperties => "skeletonProperties",
            Algo::OracleSim => "oracleSim",
            Algo::TieredSim => "tieredSim",
            Algo::LowerBoundCheck => "lowerBoundCheck",
        }
    }
}

/// Graph family plus its shape parameters. Edge weights and the concrete
/// edge set are drawn per run from the run's seed.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    ErdosRenyi { n: u32, p: f64 },
    Path { n: u32 },
    Grid { n: u32 },
    Geometric { n: u32, radius: f64 },
    Star { n: u32 },
    Lollipop { n: u32, clique: u32 },
    LowerBound { n: u32, p: f64 },
    File(PathBuf),
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::ErdosRenyi { n, p } => write!(f, "erdos-renyi n={n} p={p}"),
            GraphSpec::Path { n } => write!(f, "path n={n}"),
            GraphSpec::Grid { n } => write!(f, "grid n={n}"),
            GraphSpec::Geometric { n, radius } => write!(f, "geometric n={n} r={radius}"),
            GraphSpec::Star { n } => write!(f, "star n={n}"),
            GraphSpec::Lollipop { n, clique } => write!(f, "lollipop n={n} clique={clique}"),
            GraphSpec::LowerBound { n, p } => write!(f, "lower-bound n={n} p={p}"),
            GraphSpec::File(p) => write!(f, "file {}", p.display()),
        }
    }
}

/// How multi-source algorithms pick their source set when the file gives
/// a count instead of explicit ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourcePick {
    /// Evenly spaced ids across `0..n`.
    Spread,
    /// Half from the low end of the id range, half from the high end.
    Extremes,
    /// The pendant ids of a lower-bound instance, `0..count`.
    Pendants,
}

/// Scaling sweep attached to a scenario: rerun the same algorithm while
/// one knob grows, then fit a slope through the measured rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Sizes { sizes: Vec<u32>, seeds_per: usize, avg_degree: f64 },
    Tokens { counts: Vec<usize>, seeds_per: usize },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub algorithm: Algo,
    pub graph: GraphSpec,
    pub seeds: Vec<u64>,
    pub verify: bool,
    pub wmin: u64,
    pub wmax: u64,
    pub x: f64,
    pub eta: u32,
    pub inv_eps: u32,
    pub source: u32,
    pub sources_count: usize,
    pub sources: SourcePick,
    pub k: usize,
    pub ell: usize,
    pub max_retries: u32,
    pub h_const: f64,
    pub gamma_const: f64,
    pub sampler_const: f64,
    pub theta: f64,
    pub lambda: Option<u32>,
    pub sweep: Option<Sweep>,
}

struct Raw {
    entries: BTreeMap<String, (String, usize)>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take_str(&mut self, key: &str, default: &str) -> String {
        self.take(key).map_or_else(|| default.to_string(), |(v, _)| v)
    }

    fn take_u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|_| anyhow!("line {line}: `{key}` wants an integer, got `{v}`")),
        }
    }

    fn take_u32(&mut self, key: &str, default: u32) -> Result<u32> {
        Ok(self.take_u64(key, u64::from(default))? as u32)
    }

    fn take_usize(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.take_u64(key, default as u64)? as usize)
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|_| anyhow!("line {line}: `{key}` wants a number, got `{v}`")),
        }
    }

    fn take_bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => match v.as_str() {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => bail!("line {line}: `{key}` wants true or false, got `{v}`"),
            },
        }
    }
}

fn split_lines(text: &str) -> Result<Raw> {
    let mut entries = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {lineno}: expected `key = value`, got `{line}`"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            bail!("line {lineno}: empty key");
        }
        if value.is_empty() {
            bail!("line {lineno}: `{key}` has no value");
        }
        if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), lineno)) {
            bail!("line {lineno}: `{key}` already set on line {first}");
        }
    }
    Ok(Raw { entries })
}

/// Seed lists accept comma-separated values and inclusive `a..b` ranges,
/// e.g. `1..5,11,20..22`.
pub fn parse_seed_list(value: &str, lineno: usize) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            bail!("line {lineno}: empty entry in seed list");
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo
                .trim()
                .parse()
                .map_err(|_| anyhow!("line {lineno}: bad range start `{lo}`"))?;
            let hi: u64 = hi
                .trim()
                .parse()
                .map_err(|_| anyhow!("line {lineno}: bad range end `{hi}`"))?;
            if hi < lo {
                bail!("line {lineno}: seed range `{part}` runs backwards");
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(
                part.parse()
                    .map_err(|_| anyhow!("line {lineno}: bad seed `{part}`"))?,
            );
        }
    }
    Ok(seeds)
}

fn parse_size_list(value: &str, lineno: usize) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| anyhow!("line {lineno}: bad size `{}`", part.trim()))
        })
        .collect()
}

fn parse_graph(raw: &mut Raw) -> Result<GraphSpec> {
    let (kind, line) = raw
        .take("graph")
        .ok_or_else(|| anyhow!("missing required key `graph`"))?;
    let spec = match kind.as_str() {
        "erdos-renyi" => GraphSpec::ErdosRenyi {
            n: need_u32(raw, "n", line)?,
            p: need_f64(raw, "p", line)?,
        },
        "path" => GraphSpec::Path { n: need_u32(raw, "n", line)? },
        "grid" => GraphSpec::Grid { n: need_u32(raw, "n", line)? },
        "geometric" => GraphSpec::Geometric {
            n: need_u32(raw, "n", line)?,
            radius: need_f64(raw, "radius", line)?,
        },
        "star" => GraphSpec::Star { n: need_u32(raw, "n", line)? },
        "lollipop" => GraphSpec::Lollipop {
            n: need_u32(raw, "n", line)?,
            clique: need_u32(raw, "clique", line)?,
        },
        "lower-bound" => GraphSpec::LowerBound {
            n: need_u32(raw, "n", line)?,
            p: need_f64(raw, "p", line)?,
        },
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                GraphSpec::File(PathBuf::from(path))
            } else {
                bail!("line {line}: unknown graph family `{other}`");
            }
        }
    };
    Ok(spec)
}

fn need_u32(raw: &mut Raw, key: &str, graph_line: usize) -> Result<u32> {
    match raw.take(key) {
        Some((v, line)) => v
            .parse()
            .map_err(|_| anyhow!("line {line}: `{key}` wants an integer, got `{v}`")),
        None => bail!("line {graph_line}: this graph family needs `{key}`"),
    }
}

fn need_f64(raw: &mut Raw, key: &str, graph_line: usize) -> Result<f64> {
    match raw.take(key) {
        Some((v, line)) => v
            .parse()
            .map_err(|_| anyhow!("line {line}: `{key}` wants a number, got `{v}`")),
        None => bail!("line {graph_line}: this graph family needs `{key}`"),
    }
}

fn parse_sweep(raw: &mut Raw) -> Result<Option<Sweep>> {
    let sizes = raw.take("sweep-n");
    let tokens = raw.take("sweep-k");
    if sizes.is_some() && tokens.is_some() {
        bail!("a scenario sweeps sizes or token counts, not both");
    }
    let seeds_per = raw.take_usize("seeds-per-size", 5)?;
    if seeds_per == 0 {
        bail!("`seeds-per-size` must be at least 1");
    }
    if let Some((v, line)) = sizes {
        let sizes: Vec<u32> = parse_size_list(&v, line)?.into_iter().map(|s| s as u32).collect();
        if sizes.len() < 3 {
            bail!("line {line}: a size sweep needs at least 3 sizes");
        }
        let avg_degree = raw.take_f64("avg-degree", 16.0)?;
        return Ok(Some(Sweep::Sizes { sizes, seeds_per, avg_degree }));
    }
    if let Some((v, line)) = tokens {
        let counts: Vec<usize> = parse_size_list(&v, line)?.into_iter().map(|s| s as usize).collect();
        if counts.len() < 3 {
            bail!("line {line}: a token sweep needs at least 3 counts");
        }
        return Ok(Some(Sweep::Tokens { counts, seeds_per }));
    }
    Ok(None)
}

pub fn parse(text: &str, default_name: &str) -> Result<Scenario> {
    let mut raw = split_lines(text)?;

    let (algo_str, algo_line) = raw
        .take("algorithm")
        .ok_or_else(|| anyhow!("missing required key `algorithm`"))?;
    let algorithm = Algo::from_name(&algo_str)
        .ok_or_else(|| anyhow!("line {algo_line}: unknown algorithm `{algo_str}`"))?;

    let graph = parse_graph(&mut raw)?;

    let seeds = match raw.take("seeds") {
        Some((v, line)) => parse_seed_list(&v, line)?,
        None => vec![1],
    };
    if seeds.is_empty() {
        bail!("`seeds` resolved to an empty list");
    }

    let sources = match raw.take("sources") {
        None => SourcePick::Spread,
        Some((v, line)) => match v.as_str() {
            "spread" => SourcePick::Spread,
            "extremes" => SourcePick::Extremes,
            "pendants" => SourcePick::Pendants,
            _ => bail!("line {line}: `sources` wants spread, extremes or pendants, got `{v}`"),
        },
    };

    let lambda = match raw.take("lambda") {
        None => None,
        Some((v, line)) if v == "unbounded" => {
            let _ = line;
            None
        }
        Some((v, line)) => Some(
            v.parse()
                .map_err(|_| anyhow!("line {line}: `lambda` wants an integer or `unbounded`"))?,
        ),
    };

    let sweep = parse_sweep(&mut raw)?;

    let sc = Scenario {
        name: raw.take_str("name", default_name),
        algorithm,
        graph,
        seeds,
        verify: raw.take_bool("verify", true)?,
        wmin: raw.take_u64("wmin", 1)?,
        wmax: raw.take_u64("wmax", 1)?,
        x: raw.take_f64("x", 2.0 / 3.0)?,
        eta: raw.take_u32("eta", 1)?,
        inv_eps: raw.take_u32("inv-eps", 2)?,
        source: raw.take_u32("source", 0)?,
        sources_count: raw.take_usize("sources-count", 1)?,
        sources,
        k: raw.take_usize("k", 1)?,
        ell: raw.take_usize("ell", 1)?,
        max_retries: raw.take_u32("max-retries", 4)?,
        h_const: raw.take_f64("h-const", 2.0)?,
        gamma_const: raw.take_f64("gamma-const", 4.0)?,
        sampler_const: raw.take_f64("sampler-const", 2.0)?,
        theta: raw.take_f64("theta", 1.0)?,
        lambda,
        sweep,
    };

    if sc.wmin == 0 || sc.wmax < sc.wmin {
        bail!("weights want 1 <= wmin <= wmax, got {}..{}", sc.wmin, sc.wmax);
    }
    if let Some((key, (_, line))) = raw.entries.iter().next() {
        bail!("line {line}: unknown key `{key}`");
    }
    Ok(sc)
}

/// Reads and parses one scenario file. The scenario name defaults to the
/// file stem.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse(&text, stem).with_context(|| format!("parsing scenario {}", path.display()))
}

/// Parses a `gen-graph` spec string: the same keys a scenario file uses,
/// packed as `family:key=value,key=value`.
pub fn parse_graph_spec(spec: &str) -> Result<(GraphSpec, u64, u64, u64)> {
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut text = format!("algorithm = hybridExactSSSP\ngraph = {family}\n");
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("bad graph spec fragment `{pair}`, want key=value"))?;
        text.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
    }
    let sc = parse(&text, "gen").context("parsing graph spec")?;
    let seed = sc.seeds[0];
    Ok((sc.graph, sc.wmin, sc.wmax, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_full_scenario_round_trips() {
        let text = "\
# single-source runs on a random graph
name = demo
algorithm = hybridExactSSSP
graph = erdos-renyi
n = 512
p = 0.02
wmin = 1
wmax = 100
seeds = 1..3,9
source = 7
max-retries = 2
";
        let sc = parse(text, "fallback").unwrap();
        assert_eq!(sc.name, "demo");
        assert_eq!(sc.algorithm, Algo::HybridExactSssp);
        assert_eq!(sc.graph, GraphSpec::ErdosRenyi { n: 512, p: 0.02 });
        assert_eq!(sc.seeds, vec![1, 2, 3, 9]);
        assert_eq!(sc.source, 7);
        assert_eq!(sc.max_retries, 2);
        assert!(sc.verify);
        assert!(sc.sweep.is_none());
    }

    #[test]
    fn errors_carry_the_offending_line_number() {
        let text = "algorithm = hybridExactSSSP\ngraph = path\nn = twelve\n";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("line 3"), "got: {err}");

        let text = "algorithm = hybridExactSSSP\ngraph = path\nn = 5\nbogus-key = 1\n";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("bogus-key"), "got: {err}");

        let text = "algorithm = hybridExactSSSP\ngraph = path\nn = 5\nseeds = 9..2\n";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("backwards"), "got: {err}");
    }

    #[test]
    fn missing_sections_and_duplicates_are_rejected() {
        let err = parse("graph = path\nn = 4\n", "x").unwrap_err().to_string();
        assert!(err.contains("algorithm"), "got: {err}");

        let text = "algorithm = rssp\ngraph = path\nn = 4\nn = 5\n";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("already set"), "got: {err}");

        let text = "algorithm = rssp\ngraph = geometric\nn = 40\n";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("radius"), "got: {err}");
    }

    #[test]
    fn sweeps_need_enough_sizes() {
        let text = "\
algorithm = tokenDissemination
graph = path
n = 1024
sweep-k = 64,256
";
        let err = parse(text, "x").unwrap_err().to_string();
        assert!(err.contains("at least 3"), "got: {err}");

        let text = "\
algorithm = hybridExactSSSP
graph = erdos-renyi
n = 512
p = 0.03
sweep-n = 512,4096,32768
seeds-per-size = 5
avg-degree = 16
";
        let sc = parse(text, "x").unwrap();
        match sc.sweep {
            Some(Sweep::Sizes { ref sizes, seeds_per, avg_degree }) => {
                assert_eq!(sizes, &[512, 4096, 32768]);
                assert_eq!(seeds_per, 5);
                assert_eq!(avg_degree, 16.0);
            }
            other => panic!("wrong sweep: {other:?}"),
        }
    }

    #[test]
    fn graph_spec_strings_parse_for_gen_graph() {
        let (spec, wmin, wmax, seed) =
            parse_graph_spec("lollipop:n=512,clique=256,wmin=1,wmax=4,seeds=9").unwrap();
        assert_eq!(spec, GraphSpec::Lollipop { n: 512, clique: 256 });
        assert_eq!((wmin, wmax, seed), (1, 4, 9));

        assert!(parse_graph_spec("moebius:n=4").is_err());
    }

    #[test]
    fn shipped_corpus_parses() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let mut count = 0usize;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().map_or(false, |e| e == "scn") {
                load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
                count += 1;
            }
        }
        assert!(count >= 40, "corpus shrank to {count} files");
    }
}
