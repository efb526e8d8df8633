//! Balanced separators: validity checking and three constructions.
//!
//! A set `R` of edges is balanced when every connected component of
//! `(V, E \ R)` keeps at most `floor(m / 2)` edges, `m = |E|`.

use std::fmt;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hypergraph::{Hypergraph, HypergraphError, UnionFind};

pub const DEFAULT_MAX_TRIALS: usize = 1000;

/// Vertex-cut enumeration visits `2^n` subsets; refuse beyond this.
pub const VERTEX_CUT_MAX_VERTICES: usize = 30;

/// `find_separator` with [`SeparatorStrategy::Auto`] enumerates edge subsets
/// up to this many edges and samples above it.
pub const AUTO_EXHAUSTIVE_MAX_EDGES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatorError {
    #[error("r must be at least 2, got {0}")]
    UniformityTooSmall(usize),
    #[error("hypergraph is not {r}-uniform (edge {edge} has size {size})")]
    NotUniform { r: usize, edge: usize, size: usize },
    #[error("edge index {edge} out of range (m = {m})")]
    EdgeOutOfRange { edge: usize, m: usize },
    #[error("vertex-cut search over {n} vertices exceeds the limit of {limit}")]
    TooManyVertices { n: usize, limit: usize },
    #[error("max_trials must be positive")]
    ZeroTrials,
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// `(1 - 2^(-1/r))^r`.
pub fn epsilon_r(r: usize) -> Result<f64, SeparatorError> {
    if r < 2 {
        return Err(SeparatorError::UniformityTooSmall(r));
    }
    Ok((1.0 - 2f64.powf(-1.0 / r as f64)).powi(r as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeparatorMethod {
    Trivial,
    Random,
    Exhaustive,
    VertexCut,
}

impl fmt::Display for SeparatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparatorMethod::Trivial => "trivial",
            SeparatorMethod::Random => "random",
            SeparatorMethod::Exhaustive => "exhaustive",
            SeparatorMethod::VertexCut => "vertex-cut",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorResult {
    /// Separator edge indices, sorted.
    pub edges: Vec<usize>,
    /// Edge counts of the components of `(V, E \ R)` that still have edges.
    pub component_edge_counts: Vec<usize>,
    pub method: SeparatorMethod,
    pub trials_used: usize,
    pub size_bound_used: f64,
    /// Set when sampling gave up and the first `ceil(m/2)` edges were used.
    pub fallback: bool,
}

impl SeparatorResult {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    fn certified(h: &Hypergraph, edges: Vec<usize>, method: SeparatorMethod, trials: usize, bound: f64) -> Self {
        let counts = h.components_excluding(&edges).edge_counts();
        SeparatorResult {
            edges,
            component_edge_counts: counts,
            method,
            trials_used: trials,
            size_bound_used: bound,
            fallback: false,
        }
    }
}

/// Parameters of the sampling construction for an `r`-uniform hypergraph
/// with `n` vertices and maximum degree `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorParams {
    pub r: usize,
    /// Per-vertex inclusion probability, `2^(-1/r)`.
    pub p: f64,
    pub epsilon: f64,
    /// Concentration slack `4 k sqrt(n p (1 - p))`.
    pub slack: f64,
    pub max_trials: usize,
}

impl SeparatorParams {
    pub fn new(r: usize, n: usize, k: usize) -> Result<Self, SeparatorError> {
        let epsilon = epsilon_r(r)?;
        let p = 2f64.powf(-1.0 / r as f64);
        Ok(SeparatorParams {
            r,
            p,
            epsilon,
            slack: slack(n, k, p),
            max_trials: DEFAULT_MAX_TRIALS,
        })
    }

    pub fn for_hypergraph(h: &Hypergraph, r: usize) -> Result<Self, SeparatorError> {
        Self::new(r, h.num_vertices(), h.max_degree())
    }

    pub fn with_max_trials(mut self, max_trials: usize) -> Self {
        self.max_trials = max_trials;
        self
    }

    /// `(1/2 - eps) m + 3 slack`: crossing excess plus the two trimming sets.
    pub fn size_bound(&self, m: usize) -> f64 {
        (0.5 - self.epsilon) * m as f64 + 3.0 * self.slack
    }
}

pub fn slack(n: usize, k: usize, p: f64) -> f64 {
    4.0 * k as f64 * (n as f64 * p * (1.0 - p)).sqrt()
}

/// Outcome of [`is_balanced_separator`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceCheck {
    pub balanced: bool,
    pub component_edge_counts: Vec<usize>,
}

pub fn is_balanced_separator(h: &Hypergraph, r: &[usize]) -> Result<BalanceCheck, SeparatorError> {
    let m = h.num_edges();
    if let Some(&edge) = r.iter().find(|&&i| i >= m) {
        return Err(SeparatorError::EdgeOutOfRange { edge, m });
    }
    let counts = h.components_excluding(r).edge_counts();
    Ok(BalanceCheck { balanced: counts.iter().all(|&c| c <= m / 2), component_edge_counts: counts })
}

/// Reusable scratch space for checking many candidate separators on one
/// hypergraph.
struct BalanceScratch<'a> {
    h: &'a Hypergraph,
    uf: UnionFind,
    count: Vec<usize>,
}

impl<'a> BalanceScratch<'a> {
    fn new(h: &'a Hypergraph) -> Self {
        BalanceScratch { h, uf: UnionFind::new(h.num_vertices()), count: vec![0; h.num_vertices()] }
    }

    fn balanced(&mut self, removed: &[bool]) -> bool {
        let n = self.h.num_vertices();
        let half = self.h.num_edges() / 2;
        self.uf = UnionFind::new(n);
        self.count.iter_mut().for_each(|c| *c = 0);
        for (i, e) in self.h.edges().iter().enumerate() {
            if !removed[i] {
                for w in e.windows(2) {
                    self.uf.union(w[0], w[1]);
                }
            }
        }
        for (i, e) in self.h.edges().iter().enumerate() {
            if !removed[i] {
                let root = self.uf.find(e[0]);
                self.count[root] += 1;
                if self.count[root] > half {
                    return false;
                }
            }
        }
        true
    }
}

fn check_uniform(h: &Hypergraph, r: usize) -> Result<(), SeparatorError> {
    match h.edges().iter().position(|e| e.len() != r) {
        Some(edge) => Err(SeparatorError::NotUniform { r, edge, size: h.edge(edge).len() }),
        None => Ok(()),
    }
}

/// Trial `i` draws from an independent ChaCha stream, so results do not
/// depend on how many trials ran before it.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Samples vertex sets until one has about half the edges inside and a small
/// cut, then trims the two sides down to `floor(m/2)` edges each.
pub fn random_separator(h: &Hypergraph, params: &SeparatorParams, seed: u64) -> Result<SeparatorResult, SeparatorError> {
    check_uniform(h, params.r)?;
    if params.max_trials == 0 {
        return Err(SeparatorError::ZeroTrials);
    }
    let m = h.num_edges();
    let bound = params.size_bound(m);
    if is_balanced_separator(h, &[])?.balanced {
        return Ok(SeparatorResult::certified(h, Vec::new(), SeparatorMethod::Trivial, 0, bound));
    }

    let half = m / 2;
    let target_inside = m as f64 / 2.0;
    let target_cut = (0.5 - params.epsilon) * m as f64;
    let mut in_s = vec![false; h.num_vertices()];
    for trial in 0..params.max_trials {
        let mut rng = trial_rng(seed, trial);
        for slot in in_s.iter_mut() {
            *slot = rng.random_bool(params.p);
        }
        let part = h.edge_partition_mask(&in_s);
        let inside = part.inside.len() as f64;
        let crossing = part.crossing.len() as f64;
        if (inside - target_inside).abs() > params.slack || crossing > target_cut + params.slack {
            continue;
        }
        let mut r = part.crossing;
        // Surplus edges on each side, lowest indices first.
        r.extend(part.inside.iter().take(part.inside.len().saturating_sub(half)));
        r.extend(part.outside.iter().take(part.outside.len().saturating_sub(half)));
        r.sort_unstable();
        return Ok(SeparatorResult::certified(h, r, SeparatorMethod::Random, trial + 1, bound));
    }

    let r: Vec<usize> = (0..m.div_ceil(2)).collect();
    let mut res = SeparatorResult::certified(h, r, SeparatorMethod::Trivial, params.max_trials, bound);
    res.fallback = true;
    Ok(res)
}

/// Smallest balanced separator of size at most `size_cap`, found by
/// enumerating edge subsets by size and then lexicographically. `None` when
/// no subset within the cap is balanced.
pub fn exhaustive_separator(h: &Hypergraph, size_cap: usize) -> Option<SeparatorResult> {
    let m = h.num_edges();
    let mut scratch = BalanceScratch::new(h);
    let mut removed = vec![false; m];
    for size in 0..=size_cap.min(m) {
        for subset in (0..m).combinations(size) {
            for &i in &subset {
                removed[i] = true;
            }
            let ok = scratch.balanced(&removed);
            for &i in &subset {
                removed[i] = false;
            }
            if ok {
                return Some(SeparatorResult::certified(h, subset, SeparatorMethod::Exhaustive, 0, size_cap as f64));
            }
        }
    }
    None
}

/// First vertex set `S` (by size, then lexicographically) whose cut
/// `E(S, V \ S)` is a balanced separator of size at most `size_bound`.
pub fn vertex_cut_separator(h: &Hypergraph, size_bound: f64) -> Result<Option<SeparatorResult>, SeparatorError> {
    let n = h.num_vertices();
    if n > VERTEX_CUT_MAX_VERTICES {
        return Err(SeparatorError::TooManyVertices { n, limit: VERTEX_CUT_MAX_VERTICES });
    }
    let m = h.num_edges();
    let mut scratch = BalanceScratch::new(h);
    let mut in_s = vec![false; n];
    let mut removed = vec![false; m];
    for size in 0..=n {
        for subset in (0..n).combinations(size) {
            in_s.iter_mut().for_each(|b| *b = false);
            for &v in &subset {
                in_s[v] = true;
            }
            let mut cut = 0usize;
            for (i, e) in h.edges().iter().enumerate() {
                let first = in_s[e[0]];
                removed[i] = e.iter().any(|&v| in_s[v] != first);
                cut += removed[i] as usize;
            }
            if cut as f64 <= size_bound && scratch.balanced(&removed) {
                let r: Vec<usize> = (0..m).filter(|&i| removed[i]).collect();
                return Ok(Some(SeparatorResult::certified(h, r, SeparatorMethod::VertexCut, 0, size_bound)));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatorStrategy {
    Random { max_trials: usize },
    Exhaustive,
    /// Exhaustive up to [`AUTO_EXHAUSTIVE_MAX_EDGES`] edges, random above.
    Auto { max_trials: usize },
}

impl Default for SeparatorStrategy {
    fn default() -> Self {
        SeparatorStrategy::Auto { max_trials: DEFAULT_MAX_TRIALS }
    }
}

/// Size bound `(1/2 - eps_r) m + 3 slack` for `h` padded to `r`-uniform,
/// with `r` and `k` chosen as in [`find_separator`].
pub fn theory_bound(h: &Hypergraph) -> Result<f64, SeparatorError> {
    let (r, k) = padding_params(h);
    let u = h.uniformize(r, k)?;
    Ok(SeparatorParams::new(r, u.hypergraph.num_vertices(), k)?.size_bound(h.num_edges()))
}

fn padding_params(h: &Hypergraph) -> (usize, usize) {
    (h.max_edge_size().max(2), h.max_degree().max(1))
}

/// Separator for an arbitrary hypergraph: pads it to `r`-uniform (with `r`
/// the largest edge size, at least 2) and runs the chosen construction.
/// Edge indices carry over unchanged and the returned component counts are
/// those of `h` itself.
pub fn find_separator(h: &Hypergraph, strategy: SeparatorStrategy, seed: u64) -> Result<SeparatorResult, SeparatorError> {
    let m = h.num_edges();
    let use_random = match strategy {
        SeparatorStrategy::Random { .. } => true,
        SeparatorStrategy::Exhaustive => false,
        SeparatorStrategy::Auto { .. } => m > AUTO_EXHAUSTIVE_MAX_EDGES,
    };
    let mut res = if use_random {
        let max_trials = match strategy {
            SeparatorStrategy::Random { max_trials } | SeparatorStrategy::Auto { max_trials } => max_trials,
            SeparatorStrategy::Exhaustive => DEFAULT_MAX_TRIALS,
        };
        let (r, k) = padding_params(h);
        let u = h.uniformize(r, k)?;
        let params = SeparatorParams::new(r, u.hypergraph.num_vertices(), k)?.with_max_trials(max_trials);
        random_separator(&u.hypergraph, &params, seed)?
    } else {
        // Any ceil(m/2) edges are balanced, so this always succeeds.
        exhaustive_separator(h, m).expect("half of the edges always form a balanced separator")
    };
    res.component_edge_counts = h.components_excluding(&res.edges).edge_counts();
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hg(n: usize, edges: &[&[usize]]) -> Hypergraph {
        Hypergraph::new(n, edges.iter().map(|e| e.to_vec()).collect()).unwrap()
    }

    fn path5() -> Hypergraph {
        hg(5, &[&[0, 1], &[1, 2], &[2, 3], &[3, 4]])
    }

    fn star4() -> Hypergraph {
        hg(5, &[&[0, 1], &[0, 2], &[0, 3], &[0, 4]])
    }

    fn triangle() -> Hypergraph {
        hg(3, &[&[0, 1], &[1, 2], &[0, 2]])
    }

    /// Minimum separator size by enumerating all 2^m edge masks.
    fn brute_min(h: &Hypergraph) -> usize {
        let m = h.num_edges();
        (0u32..1 << m)
            .filter(|mask| {
                let r: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
                is_balanced_separator(h, &r).unwrap().balanced
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_r(2).unwrap() - (1.5 - 2f64.sqrt())).abs() < 1e-12);
        assert!((epsilon_r(2).unwrap() - 0.0857864).abs() < 1e-7);
        assert!((epsilon_r(3).unwrap() - 0.0087800).abs() < 1e-7);
        assert!(epsilon_r(2).unwrap() >= 0.0625);
        assert!(epsilon_r(1).is_err());
        assert!(epsilon_r(0).is_err());
    }

    #[test]
    fn epsilon_decreasing_and_above_floor() {
        let eps: Vec<f64> = (2..=8).map(|r| epsilon_r(r).unwrap()).collect();
        assert!(eps.windows(2).all(|w| w[1] < w[0]));
        for (r, e) in (2..=8usize).zip(&eps) {
            assert!(*e >= 1.0 / ((2 * r) as f64).powi(r as i32));
            assert!(*e > 0.0 && *e < 0.5);
        }
    }

    #[test]
    fn balance_check_examples() {
        let p = path5();
        assert!(is_balanced_separator(&p, &[0, 1, 2, 3]).unwrap().balanced);
        let check = is_balanced_separator(&p, &[]).unwrap();
        assert!(!check.balanced);
        assert_eq!(check.component_edge_counts, vec![4]);
        let mid = is_balanced_separator(&p, &[1]).unwrap();
        assert!(mid.balanced);
        assert_eq!(mid.component_edge_counts, vec![1, 2]);
        assert_eq!(brute_min(&p), 1);
        assert!(is_balanced_separator(&p, &[4]).is_err());
    }

    #[test]
    fn random_on_matching_is_trivial() {
        let h = hg(4, &[&[0, 1], &[2, 3]]);
        let params = SeparatorParams::for_hypergraph(&h, 2).unwrap();
        let res = random_separator(&h, &params, 0).unwrap();
        assert!(res.edges.is_empty());
        assert_eq!(res.method, SeparatorMethod::Trivial);
        assert!(!res.fallback);
    }

    #[test]
    fn single_edge_needs_removal() {
        let h = hg(2, &[&[0, 1]]);
        let params = SeparatorParams::for_hypergraph(&h, 2).unwrap();
        let res = random_separator(&h, &params, 0).unwrap();
        assert_eq!(res.edges, vec![0]);
        let empty = Hypergraph::edgeless(3);
        assert!(random_separator(&empty, &params, 0).unwrap().edges.is_empty());
    }

    #[test]
    fn random_rejects_non_uniform() {
        let h = hg(4, &[&[0, 1], &[1, 2, 3]]);
        let params = SeparatorParams::new(2, 4, 2).unwrap();
        assert!(matches!(random_separator(&h, &params, 0), Err(SeparatorError::NotUniform { .. })));
    }

    #[test]
    fn random_falls_back_when_sampling_cannot_succeed() {
        // Zero slack makes acceptance need |E(S)| = m/2 exactly, impossible
        // for odd m; the fallback must still be balanced.
        let h = triangle();
        let params = SeparatorParams { slack: 0.0, max_trials: 5, ..SeparatorParams::new(2, 3, 2).unwrap() };
        let res = random_separator(&h, &params, 9).unwrap();
        assert!(res.fallback);
        assert_eq!(res.edges, vec![0, 1]);
        assert!(is_balanced_separator(&h, &res.edges).unwrap().balanced);
    }

    #[test]
    fn exhaustive_examples() {
        let res = exhaustive_separator(&path5(), 2).unwrap();
        assert_eq!(res.edges, vec![1]);
        assert_eq!(exhaustive_separator(&star4(), 4).unwrap().size(), 2);
        assert_eq!(brute_min(&star4()), 2);
        assert!(exhaustive_separator(&star4(), 1).is_none());
        let two = hg(6, &[&[0, 1], &[1, 2], &[3, 4], &[4, 5]]);
        assert!(exhaustive_separator(&two, 3).unwrap().edges.is_empty());
    }

    #[test]
    fn vertex_cut_examples() {
        let two_triangles = hg(6, &[&[0, 1], &[1, 2], &[0, 2], &[3, 4], &[4, 5], &[3, 5]]);
        assert!(vertex_cut_separator(&two_triangles, 0.0).unwrap().unwrap().edges.is_empty());
        let res = vertex_cut_separator(&path5(), 1.0).unwrap().unwrap();
        assert_eq!(res.edges, vec![1]);
        assert_eq!(res.method, SeparatorMethod::VertexCut);
        assert!(vertex_cut_separator(&triangle(), 0.0).unwrap().is_none());
        let big = Hypergraph::edgeless(VERTEX_CUT_MAX_VERTICES + 1);
        assert!(vertex_cut_separator(&big, 1.0).is_err());
    }

    #[test]
    fn find_separator_handles_mixed_sizes() {
        let h = hg(6, &[&[0, 1, 2], &[2, 3], &[3, 4, 5], &[5], &[0, 5]]);
        for strategy in [SeparatorStrategy::Exhaustive, SeparatorStrategy::Random { max_trials: 50 }] {
            let res = find_separator(&h, strategy, 3).unwrap();
            let check = is_balanced_separator(&h, &res.edges).unwrap();
            assert!(check.balanced);
            assert_eq!(check.component_edge_counts, res.component_edge_counts);
        }
    }

    fn arb_graph() -> impl Strategy<Value = Hypergraph> {
        (2usize..9).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..12).prop_map(move |pairs| {
                let edges = pairs.into_iter().filter(|(a, b)| a != b).map(|(a, b)| vec![a, b]).collect();
                Hypergraph::new(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn exhaustive_matches_brute_force(h in arb_graph()) {
            let res = exhaustive_separator(&h, h.num_edges()).unwrap();
            prop_assert_eq!(res.size(), brute_min(&h));
            prop_assert!(is_balanced_separator(&h, &res.edges).unwrap().balanced);
        }

        #[test]
        fn random_is_reproducible_and_balanced(h in arb_graph(), seed in any::<u64>()) {
            let params = SeparatorParams::for_hypergraph(&h, 2).unwrap().with_max_trials(20);
            let a = random_separator(&h, &params, seed).unwrap();
            let b = random_separator(&h, &params, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let check = is_balanced_separator(&h, &a.edges).unwrap();
            prop_assert!(check.balanced);
            prop_assert_eq!(a.component_edge_counts.iter().sum::<usize>() + a.size(), h.num_edges());
        }

        #[test]
        fn vertex_cut_results_are_balanced(h in arb_graph(), bound in 0usize..8) {
            if let Some(res) = vertex_cut_separator(&h, bound as f64).unwrap() {
                prop_assert!(res.size() <= bound);
                prop_assert!(is_balanced_separator(&h, &res.edges).unwrap().balanced);
            }
        }
    }
}
