//! Random bounded-degree uniform hypergraphs, an exact minimum balanced
//! separator oracle, and a report-only tightness experiment comparing the
//! minimum with `(1/2 - eps_r) m`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::derive_seed;
use crate::hypergraph::{Hypergraph, HypergraphError};
use crate::separator::{epsilon_r, SeparatorError};

/// Most `r`-subsets the generator will enumerate.
pub const MAX_CANDIDATE_EDGES: u128 = 1 << 24;
/// Edge-subset enumeration limit of [`min_balanced_separator`].
pub const MIN_SEP_MAX_EDGES: usize = 18;
/// Vertex limit of the partition-based size oracle used above that.
pub const PARTITION_MAX_VERTICES: usize = 16;

pub const CSV_HEADER: &str = "n,k,r,m,max_degree,min_sep,theory_bound,ratio,seed";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("need 2 <= r <= n, got r = {r}, n = {n}")]
    BadUniformity { n: usize, r: usize },
    #[error("edge probability {q} exceeds 1 (k too large for n and r)")]
    ProbabilityTooLarge { q: f64 },
    #[error("C({n}, {r}) candidate edges exceed the budget of {MAX_CANDIDATE_EDGES}")]
    TooManyCandidates { n: usize, r: usize },
    #[error("oracle budget exceeded: m = {m}, non-isolated vertices = {vertices}")]
    OracleBudget { m: usize, vertices: usize },
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Separator(#[from] SeparatorError),
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub seed: u64,
}

impl GeneratorParams {
    /// Probability `(nk/r) / C(n, r)` of including each `r`-subset.
    pub fn q(&self) -> f64 {
        (self.n * self.k) as f64 / self.r as f64 / binomial(self.n, self.r) as f64
    }

    /// Degree cap `ceil(2 e k)` enforced after sampling.
    pub fn degree_cap(&self) -> usize {
        (2.0 * std::f64::consts::E * self.k as f64).ceil() as usize
    }

    /// Expected edge count before trimming.
    pub fn expected_edges(&self) -> f64 {
        (self.n * self.k) as f64 / self.r as f64
    }
}

/// Includes each `r`-subset of the vertices (in lexicographic order)
/// independently with probability `q`, then drops, in index order, every
/// edge that still touches a vertex of degree above the cap.
pub fn random_uniform_hypergraph(params: &GeneratorParams) -> Result<Hypergraph, ExperimentError> {
    let GeneratorParams { n, r, seed, .. } = *params;
    if r < 2 || r > n {
        return Err(ExperimentError::BadUniformity { n, r });
    }
    if binomial(n, r) > MAX_CANDIDATE_EDGES {
        return Err(ExperimentError::TooManyCandidates { n, r });
    }
    let q = params.q();
    if q > 1.0 {
        return Err(ExperimentError::ProbabilityTooLarge { q });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<Vec<usize>> = (0..n).combinations(r).filter(|_| rng.random_bool(q)).collect();

    let cap = params.degree_cap();
    let mut degree = vec![0usize; n];
    for e in &sampled {
        for &v in e {
            degree[v] += 1;
        }
    }
    let mut kept = Vec::with_capacity(sampled.len());
    for e in sampled {
        if e.iter().any(|&v| degree[v] > cap) {
            for &v in &e {
                degree[v] -= 1;
            }
        } else {
            kept.push(e);
        }
    }
    Ok(Hypergraph::new(n, kept)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinSeparator {
    pub size: usize,
    /// Lexicographically first separator of minimum size.
    pub witness: Vec<usize>,
}

/// Whether removing the edges flagged in `removed` leaves every component
/// with at most `m / 2` edges. Plain BFS, independent of the separator
/// module.
fn balanced_after(h: &Hypergraph, incidence: &[Vec<usize>], removed: u64) -> bool {
    let half = h.num_edges() / 2;
    let mut seen_edge = vec![false; h.num_edges()];
    let mut seen_vertex = vec![false; h.num_vertices()];
    for start in 0..h.num_edges() {
        if removed >> start & 1 == 1 || seen_edge[start] {
            continue;
        }
        let mut count = 0;
        let mut queue = VecDeque::from([start]);
        seen_edge[start] = true;
        while let Some(e) = queue.pop_front() {
            count += 1;
            for &v in h.edge(e) {
                if std::mem::replace(&mut seen_vertex[v], true) {
                    continue;
                }
                for &f in &incidence[v] {
                    if removed >> f & 1 == 0 && !seen_edge[f] {
                        seen_edge[f] = true;
                        queue.push_back(f);
                    }
                }
            }
        }
        if count > half {
            return false;
        }
    }
    true
}

/// Exact minimum balanced separator by enumerating all `2^m` edge subsets.
pub fn min_balanced_separator(h: &Hypergraph) -> Result<MinSeparator, ExperimentError> {
    let m = h.num_edges();
    if m > MIN_SEP_MAX_EDGES {
        return Err(ExperimentError::OracleBudget { m, vertices: non_isolated(h).len() });
    }
    let incidence = h.incidence();
    let mut best: Option<(usize, Vec<usize>)> = None;
    for mask in 0u64..1 << m {
        let size = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|(s, _)| size > *s) {
            continue;
        }
        if !balanced_after(h, &incidence, mask) {
            continue;
        }
        let set: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let better = match &best {
            None => true,
            Some((s, w)) => size < *s || set < *w,
        };
        if better {
            best = Some((size, set));
        }
    }
    let (size, witness) = best.expect("removing every edge is balanced");
    Ok(MinSeparator { size, witness })
}

fn non_isolated(h: &Hypergraph) -> Vec<usize> {
    let mut vs: Vec<usize> = h.edges().iter().flatten().copied().collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

/// Size of a minimum balanced separator. Uses subset enumeration up to
/// [`MIN_SEP_MAX_EDGES`] edges; above that, the identity
/// `min |R| = m - max over vertex partitions of sum_B min(|E(B)|, m/2)`
/// evaluated by a `3^v` dynamic program over the non-isolated vertices.
pub fn min_balanced_separator_size(h: &Hypergraph) -> Result<usize, ExperimentError> {
    if h.num_edges() <= MIN_SEP_MAX_EDGES {
        return Ok(min_balanced_separator(h)?.size);
    }
    partition_min_separator_size(h)
}

pub(crate) fn partition_min_separator_size(h: &Hypergraph) -> Result<usize, ExperimentError> {
    let m = h.num_edges();
    let vertices = non_isolated(h);
    let v = vertices.len();
    if v > PARTITION_MAX_VERTICES {
        return Err(ExperimentError::OracleBudget { m, vertices: v });
    }
    let mut local = vec![0usize; h.num_vertices()];
    for (i, &x) in vertices.iter().enumerate() {
        local[x] = i;
    }
    let full = 1usize << v;
    // inside[S] = number of edges contained in S.
    let mut inside = vec![0u32; full];
    for e in h.edges() {
        inside[e.iter().fold(0, |acc, &x| acc | 1 << local[x])] += 1;
    }
    for bit in 0..v {
        for s in 0..full {
            if s >> bit & 1 == 1 {
                inside[s] += inside[s ^ 1 << bit];
            }
        }
    }
    let half = (m / 2) as u32;
    let mut kept = vec![0u32; full];
    for s in 1..full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut best = 0;
        let mut sub = rest;
        loop {
            let block = sub | low;
            best = best.max(inside[block].min(half) + kept[s ^ block]);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        kept[s] = best;
    }
    Ok(m - kept[full - 1] as usize)
}

/// Relative deviation of `|E(S)|` from its expectation over random vertex
/// sets of size `ceil(alpha n)`. Reported only.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub samples: usize,
    pub set_size: usize,
    pub expected_inside: f64,
    pub mean_relative_deviation: f64,
    pub max_relative_deviation: f64,
}

pub fn sample_regularity(h: &Hypergraph, r: usize, alpha: f64, samples: usize, seed: u64) -> RegularityReport {
    let n = h.num_vertices();
    let size = ((alpha * n as f64).ceil() as usize).min(n);
    let expected = h.num_edges() as f64 * binomial(size, r) as f64 / binomial(n, r).max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut devs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let chosen = rand::seq::index::sample(&mut rng, n, size);
        let mut mask = vec![false; n];
        for v in chosen {
            mask[v] = true;
        }
        let inside = h.edge_partition_mask(&mask).inside.len() as f64;
        devs.push(if expected > 0.0 { (inside - expected).abs() / expected } else { inside });
    }
    RegularityReport {
        samples,
        set_size: size,
        expected_inside: expected,
        mean_relative_deviation: if samples == 0 { 0.0 } else { devs.iter().sum::<f64>() / samples as f64 },
        max_relative_deviation: devs.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sweep {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub rs: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
}

impl Sweep {
    /// Instance parameters in report order: `n`, then `k`, then `r`, then
    /// instance number.
    pub fn instances(&self) -> Vec<GeneratorParams> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &k in &self.ks {
                for &r in &self.rs {
                    for i in 0..self.instances {
                        let seed = [n, k, r, i].iter().fold(self.seed, |s, &x| derive_seed(s, x as u64));
                        out.push(GeneratorParams { n, k, r, seed });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub m: usize,
    pub max_degree: usize,
    pub min_sep: usize,
    pub theory_bound: f64,
    /// `min_sep / m`, 0 for an edgeless instance.
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub instances: usize,
    pub mean_m: f64,
    pub mean_ratio: f64,
    /// `1/2 - eps_r`, the asymptotic ratio.
    pub limit_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6},{}",
                row.n, row.k, row.r, row.m, row.max_degree, row.min_sep, row.theory_bound, row.ratio, row.seed
            )
            .expect("writing to a String");
        }
        out
    }
}

fn run_instance(params: &GeneratorParams) -> Result<ExperimentRow, ExperimentError> {
    let h = random_uniform_hypergraph(params)?;
    let m = h.num_edges();
    let min_sep = min_balanced_separator_size(&h)?;
    let eps = epsilon_r(params.r)?;
    Ok(ExperimentRow {
        n: params.n,
        k: params.k,
        r: params.r,
        m,
        max_degree: h.max_degree(),
        min_sep,
        theory_bound: (0.5 - eps) * m as f64,
        ratio: if m == 0 { 0.0 } else { min_sep as f64 / m as f64 },
        seed: params.seed,
    })
}

/// Runs every sweep instance on up to `jobs` threads (0 = all cores). Row
/// order follows [`Sweep::instances`] regardless of scheduling.
pub fn tightness_experiment(sweep: &Sweep, jobs: usize) -> Result<ExperimentReport, ExperimentError> {
    let params = sweep.instances();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    let rows: Vec<ExperimentRow> =
        pool.install(|| params.par_iter().map(run_instance).collect::<Result<Vec<_>, _>>())?;

    let mut cells = Vec::new();
    for chunk in rows.chunks(sweep.instances.max(1)) {
        let first = &chunk[0];
        let count = chunk.len() as f64;
        cells.push(CellSummary {
            n: first.n,
            k: first.k,
            r: first.r,
            instances: chunk.len(),
            mean_m: chunk.iter().map(|r| r.m as f64).sum::<f64>() / count,
            mean_ratio: chunk.iter().map(|r| r.ratio).sum::<f64>() / count,
            limit_ratio: 0.5 - epsilon_r(first.r)?,
        });
    }
    Ok(ExperimentReport { rows, cells })
}
