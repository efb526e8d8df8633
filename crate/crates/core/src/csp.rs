//! Constraint satisfaction problems with explicit allowed-tuple tables, and
//! the separator-based exact solver.
//!
//! The solver builds the constraint hypergraph (one vertex per constraint,
//! one edge per variable), finds a balanced separator in it, and branches
//! over every assignment to the separator variables. Each branch falls apart
//! into independent pieces on at most half of the variables, which are then
//! solved by enumeration or, in recursive mode, by the same procedure.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cnf::{Clause, Cnf, Lit};
use crate::hypergraph::Hypergraph;
use crate::separator::{find_separator, SeparatorError, SeparatorMethod, SeparatorStrategy};
use crate::util::derive_seed;

pub type Value = u32;

/// Tables larger than this many entries are rejected.
pub const MAX_TABLE_SIZE: usize = 1 << 22;

pub const DEFAULT_LEAF_BUDGET: usize = 8;

/// Default cap on the number of assignments a single enumeration may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CspError {
    #[error("domain size must be at least 2, got {0}")]
    DomainTooSmall(u32),
    #[error("constraint {constraint}: variable {var} out of range (m = {m})")]
    VarOutOfRange { constraint: usize, var: usize, m: usize },
    #[error("constraint {constraint}: variable {var} repeated in scope")]
    DuplicateScopeVar { constraint: usize, var: usize },
    #[error("tuple {tuple:?} does not match scope arity {arity}")]
    TupleArity { tuple: Vec<Value>, arity: usize },
    #[error("value {value} out of range for domain size {d}")]
    ValueOutOfRange { value: Value, d: u32 },
    #[error("table of size {d}^{arity} exceeds {MAX_TABLE_SIZE} entries")]
    TableTooLarge { d: u32, arity: usize },
    #[error("constraint {constraint} has domain {found}, expected {expected}")]
    DomainMismatch { constraint: usize, found: u32, expected: u32 },
    #[error("enumeration of {d}^{vars} assignments exceeds the budget of {budget}")]
    BudgetExceeded { d: u32, vars: usize, budget: u128 },
    #[error("operation requires a boolean domain, got d = {0}")]
    NotBoolean(u32),
    #[error("leaf budget must be positive")]
    ZeroLeafBudget,
    #[error(transparent)]
    Separator(#[from] SeparatorError),
}

/// A constraint given by the set of allowed value tuples over its scope.
///
/// `allowed` is kept sorted and duplicate-free; `table` is the same set as a
/// dense truth table indexed in mixed radix `d`, first scope position most
/// significant, so table order is lexicographic tuple order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    scope: Vec<usize>,
    allowed: Vec<Vec<Value>>,
    domain: u32,
    table: Vec<bool>,
}

impl Constraint {
    pub fn new(scope: Vec<usize>, mut allowed: Vec<Vec<Value>>, domain: u32) -> Result<Self, CspError> {
        if domain < 2 {
            return Err(CspError::DomainTooSmall(domain));
        }
        let arity = scope.len();
        let size = table_size(domain, arity).ok_or(CspError::TableTooLarge { d: domain, arity })?;
        let mut table = vec![false; size];
        for t in &allowed {
            if t.len() != arity {
                return Err(CspError::TupleArity { tuple: t.clone(), arity });
            }
            if let Some(&value) = t.iter().find(|&&v| v >= domain) {
                return Err(CspError::ValueOutOfRange { value, d: domain });
            }
            table[encode(t, domain)] = true;
        }
        allowed.sort_unstable();
        allowed.dedup();
        Ok(Constraint { scope, allowed, domain, table })
    }

    /// Constraint allowing exactly the tuples on which `pred` holds.
    pub fn from_predicate(scope: Vec<usize>, domain: u32, pred: impl Fn(&[Value]) -> bool) -> Result<Self, CspError> {
        let arity = scope.len();
        let size = table_size(domain, arity).ok_or(CspError::TableTooLarge { d: domain, arity })?;
        let allowed = (0..size).map(|i| decode(i, domain, arity)).filter(|t| pred(t)).collect();
        Self::new(scope, allowed, domain)
    }

    pub fn not_equal(a: usize, b: usize, domain: u32) -> Result<Self, CspError> {
        Self::from_predicate(vec![a, b], domain, |t| t[0] != t[1])
    }

    /// Zero-arity constraint: satisfied iff `value`.
    pub fn constant(value: bool, domain: u32) -> Result<Self, CspError> {
        Self::new(Vec::new(), if value { vec![Vec::new()] } else { Vec::new() }, domain)
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn allowed(&self) -> &[Vec<Value>] {
        &self.allowed
    }

    pub fn domain(&self) -> u32 {
        self.domain
    }

    pub fn allows(&self, tuple: &[Value]) -> bool {
        self.table[encode(tuple, self.domain)]
    }

    /// Whether the constraint holds under a full assignment of all variables.
    pub fn holds(&self, assignment: &[Value]) -> bool {
        let mut idx = 0usize;
        for &x in &self.scope {
            idx = idx * self.domain as usize + assignment[x] as usize;
        }
        self.table[idx]
    }

    pub fn is_constant(&self) -> Option<bool> {
        self.scope.is_empty().then(|| self.table[0])
    }

    /// Disallowed tuples in lexicographic order.
    pub fn forbidden_tuples(&self) -> Vec<Vec<Value>> {
        let arity = self.arity();
        (0..self.table.len())
            .filter(|&i| !self.table[i])
            .map(|i| decode(i, self.domain, arity))
            .collect()
    }

    /// Rank of `tuple` among the forbidden tuples, if it is forbidden.
    pub fn forbidden_rank(&self, tuple: &[Value]) -> Option<usize> {
        let idx = encode(tuple, self.domain);
        (!self.table[idx]).then(|| self.table[..idx].iter().filter(|&&a| !a).count())
    }

    /// Projection onto the positions `rho` leaves unassigned.
    fn restrict(&self, rho: &PartialAssignment) -> Constraint {
        let keep: Vec<usize> = (0..self.arity()).filter(|&i| rho.get(self.scope[i]).is_none()).collect();
        if keep.len() == self.arity() {
            return self.clone();
        }
        let scope = keep.iter().map(|&i| self.scope[i]).collect();
        let allowed = self
            .allowed
            .iter()
            .filter(|t| (0..t.len()).all(|i| rho.get(self.scope[i]).is_none_or(|v| v == t[i])))
            .map(|t| keep.iter().map(|&i| t[i]).collect())
            .collect();
        Constraint::new(scope, allowed, self.domain).expect("projection of a valid constraint is valid")
    }
}

fn table_size(d: u32, arity: usize) -> Option<usize> {
    let size = (d as usize).checked_pow(arity as u32)?;
    (size <= MAX_TABLE_SIZE).then_some(size)
}

fn encode(t: &[Value], d: u32) -> usize {
    t.iter().fold(0usize, |acc, &v| acc * d as usize + v as usize)
}

fn decode(mut i: usize, d: u32, arity: usize) -> Vec<Value> {
    let mut t = vec![0; arity];
    for slot in t.iter_mut().rev() {
        *slot = (i % d as usize) as Value;
        i /= d as usize;
    }
    t
}

/// Values for a subset of the variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PartialAssignment {
    values: Vec<Option<Value>>,
}

impl PartialAssignment {
    pub fn new(num_vars: usize) -> Self {
        PartialAssignment { values: vec![None; num_vars] }
    }

    pub fn from_pairs(num_vars: usize, pairs: &[(usize, Value)]) -> Self {
        let mut rho = Self::new(num_vars);
        for &(x, v) in pairs {
            rho.set(x, v);
        }
        rho
    }

    pub fn set(&mut self, var: usize, value: Value) {
        self.values[var] = Some(value);
    }

    pub fn unset(&mut self, var: usize) {
        self.values[var] = None;
    }

    pub fn get(&self, var: usize) -> Option<Value> {
        self.values.get(var).copied().flatten()
    }

    pub fn assigned(&self) -> impl Iterator<Item = (usize, Value)> + '_ {
        self.values.iter().enumerate().filter_map(|(x, v)| v.map(|v| (x, v)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A `(d, k)`-CSP on variables `0..num_vars`.
///
/// `variables` lists the variables still in play: restriction removes the
/// assigned ones, and counting ranges over exactly these.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Csp {
    num_vars: usize,
    domain: u32,
    constraints: Vec<Constraint>,
    variables: Vec<usize>,
}

impl Csp {
    pub fn new(num_vars: usize, domain: u32, constraints: Vec<Constraint>) -> Result<Self, CspError> {
        if domain < 2 {
            return Err(CspError::DomainTooSmall(domain));
        }
        for (ci, c) in constraints.iter().enumerate() {
            if c.domain != domain {
                return Err(CspError::DomainMismatch { constraint: ci, found: c.domain, expected: domain });
            }
            let mut seen = std::collections::BTreeSet::new();
            for &x in &c.scope {
                if x >= num_vars {
                    return Err(CspError::VarOutOfRange { constraint: ci, var: x, m: num_vars });
                }
                if !seen.insert(x) {
                    return Err(CspError::DuplicateScopeVar { constraint: ci, var: x });
                }
            }
        }
        Ok(Csp { num_vars, domain, constraints, variables: (0..num_vars).collect() })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn domain(&self) -> u32 {
        self.domain
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Variables not eliminated by restriction, ascending.
    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    /// Number of constraints each variable occurs in.
    pub fn frequencies(&self) -> Vec<usize> {
        let mut f = vec![0; self.num_vars];
        for c in &self.constraints {
            for &x in &c.scope {
                f[x] += 1;
            }
        }
        f
    }

    pub fn max_frequency(&self) -> usize {
        self.frequencies().into_iter().max().unwrap_or(0)
    }

    /// Mean frequency over the active variables (0 when there are none).
    pub fn average_frequency(&self) -> f64 {
        if self.variables.is_empty() {
            return 0.0;
        }
        let f = self.frequencies();
        self.variables.iter().map(|&x| f[x]).sum::<usize>() as f64 / self.variables.len() as f64
    }

    pub fn max_arity(&self) -> usize {
        self.constraints.iter().map(Constraint::arity).max().unwrap_or(0)
    }

    pub fn satisfies(&self, assignment: &[Value]) -> bool {
        self.constraints.iter().all(|c| c.holds(assignment))
    }

    pub fn count_satisfied(&self, assignment: &[Value]) -> usize {
        self.constraints.iter().filter(|c| c.holds(assignment)).count()
    }

    /// Hypergraph with one vertex per constraint and, for every variable
    /// occurring somewhere, the edge of constraints containing it.
    pub fn constraint_hypergraph(&self) -> ConstraintHypergraph {
        let mut occ: Vec<Vec<usize>> = vec![Vec::new(); self.num_vars];
        for (ci, c) in self.constraints.iter().enumerate() {
            for &x in &c.scope {
                occ[x].push(ci);
            }
        }
        let mut edges = Vec::new();
        let mut edge_vars = Vec::new();
        let mut free_vars = Vec::new();
        for &x in &self.variables {
            if occ[x].is_empty() {
                free_vars.push(x);
            } else {
                edges.push(std::mem::take(&mut occ[x]));
                edge_vars.push(x);
            }
        }
        let hypergraph = Hypergraph::new(self.constraints.len(), edges).expect("constraint indices are in range");
        ConstraintHypergraph { hypergraph, edge_vars, free_vars }
    }

    /// Fixes the variables `rho` assigns. Constraints keep their position;
    /// fully assigned ones become zero-arity constants.
    pub fn restrict(&self, rho: &PartialAssignment) -> Result<Csp, CspError> {
        for (_, v) in rho.assigned() {
            if v >= self.domain {
                return Err(CspError::ValueOutOfRange { value: v, d: self.domain });
            }
        }
        Ok(Csp {
            num_vars: self.num_vars,
            domain: self.domain,
            constraints: self.constraints.iter().map(|c| c.restrict(rho)).collect(),
            variables: self.variables.iter().copied().filter(|&x| rho.get(x).is_none()).collect(),
        })
    }

    /// Splits into independent sub-problems along the connected components
    /// of the constraint hypergraph.
    pub fn decompose(&self) -> Decomposition {
        let ch = self.constraint_hypergraph();
        let dec = ch.hypergraph.connected_components();
        let mut parts = Vec::with_capacity(dec.components.len());
        let mut constraint_ids = Vec::with_capacity(dec.components.len());
        for comp in &dec.components {
            let mut variables: Vec<usize> = comp.edges.iter().map(|&e| ch.edge_vars[e]).collect();
            variables.sort_unstable();
            parts.push(Csp {
                num_vars: self.num_vars,
                domain: self.domain,
                constraints: comp.vertices.iter().map(|&ci| self.constraints[ci].clone()).collect(),
                variables,
            });
            constraint_ids.push(comp.vertices.clone());
        }
        let (mut true_constants, mut false_constants) = (0, 0);
        for &ci in &dec.isolated_vertices {
            match self.constraints[ci].is_constant() {
                Some(true) => true_constants += 1,
                Some(false) => false_constants += 1,
                None => unreachable!("a constraint with a non-empty scope lies on an edge"),
            }
        }
        Decomposition { parts, constraint_ids, free_vars: ch.free_vars, true_constants, false_constants }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintHypergraph {
    pub hypergraph: Hypergraph,
    /// Variable id of each edge.
    pub edge_vars: Vec<usize>,
    /// Active variables occurring in no constraint.
    pub free_vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// Connected sub-problems, ordered by their smallest constraint index.
    pub parts: Vec<Csp>,
    /// Indices into the decomposed CSP's constraints, per part.
    pub constraint_ids: Vec<Vec<usize>>,
    pub free_vars: Vec<usize>,
    /// Zero-arity constraints that hold.
    pub true_constants: usize,
    /// Zero-arity constraints that fail.
    pub false_constants: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Decide,
    Count,
    Max,
}

/// Witnesses assign every variable `0..num_vars`; eliminated variables are
/// set to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveAnswer {
    Decide { satisfiable: bool, witness: Option<Vec<Value>> },
    Count(BigUint),
    Max { satisfied: usize, witness: Option<Vec<Value>> },
}

impl SolveAnswer {
    pub fn mode(&self) -> Mode {
        match self {
            SolveAnswer::Decide { .. } => Mode::Decide,
            SolveAnswer::Count(_) => Mode::Count,
            SolveAnswer::Max { .. } => Mode::Max,
        }
    }

    pub fn witness(&self) -> Option<&[Value]> {
        match self {
            SolveAnswer::Decide { witness, .. } | SolveAnswer::Max { witness, .. } => witness.as_deref(),
            SolveAnswer::Count(_) => None,
        }
    }

    /// Equality ignoring witnesses.
    pub fn same_value(&self, other: &SolveAnswer) -> bool {
        match (self, other) {
            (SolveAnswer::Decide { satisfiable: a, .. }, SolveAnswer::Decide { satisfiable: b, .. }) => a == b,
            (SolveAnswer::Count(a), SolveAnswer::Count(b)) => a == b,
            (SolveAnswer::Max { satisfied: a, .. }, SolveAnswer::Max { satisfied: b, .. }) => a == b,
            _ => false,
        }
    }
}

fn check_budget(d: u32, vars: usize, budget: u128) -> Result<(), CspError> {
    match (d as u128).checked_pow(vars as u32) {
        Some(total) if total <= budget => Ok(()),
        _ => Err(CspError::BudgetExceeded { d, vars, budget }),
    }
}

/// Answers `mode` by visiting every assignment of the active variables in
/// lexicographic order (smallest variable most significant).
pub fn brute_force(csp: &Csp, mode: Mode, budget: u128) -> Result<SolveAnswer, CspError> {
    let vars = csp.variables();
    check_budget(csp.domain, vars.len(), budget)?;
    let d = csp.domain;
    let mut assignment = vec![0 as Value; csp.num_vars];
    let mut count = BigUint::zero();
    let mut best: Option<(usize, Vec<Value>)> = None;
    loop {
        match mode {
            Mode::Decide => {
                if csp.satisfies(&assignment) {
                    return Ok(SolveAnswer::Decide { satisfiable: true, witness: Some(assignment) });
                }
            }
            Mode::Count => {
                if csp.satisfies(&assignment) {
                    count += 1u32;
                }
            }
            Mode::Max => {
                let s = csp.count_satisfied(&assignment);
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, assignment.clone()));
                }
            }
        }
        // Odometer step, last active variable fastest.
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return Ok(match mode {
                    Mode::Decide => SolveAnswer::Decide { satisfiable: false, witness: None },
                    Mode::Count => SolveAnswer::Count(count),
                    Mode::Max => {
                        let (satisfied, witness) = best.expect("at least one assignment is visited");
                        SolveAnswer::Max { satisfied, witness: Some(witness) }
                    }
                });
            }
            pos -= 1;
            let x = vars[pos];
            assignment[x] += 1;
            if assignment[x] < d {
                break;
            }
            assignment[x] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Solve large pieces by recursing instead of enumerating them.
    pub recursive: bool,
    pub separator: SeparatorStrategy,
    pub seed: u64,
    /// Pieces with at most this many variables are always enumerated.
    pub leaf_budget: usize,
    /// Largest number of assignments one enumeration may visit.
    pub enumeration_budget: u128,
    /// Branch first on variables of unusually high frequency.
    pub high_frequency_branching: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            recursive: false,
            separator: SeparatorStrategy::default(),
            seed: 0,
            leaf_budget: DEFAULT_LEAF_BUDGET,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
            high_frequency_branching: false,
        }
    }
}

/// Facts about the top-level branching of one [`solve`] call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    /// Separator variables (empty when the instance had no variables in use).
    pub separator_vars: Vec<usize>,
    pub separator_method: Option<SeparatorMethod>,
    pub separator_fallback: bool,
    pub separator_bound: f64,
    /// Variables branched on before the separator step.
    pub preprocessed_vars: Vec<usize>,
    /// Separator assignments visited at the top level.
    pub branches: u128,
    /// Recursive solver invocations below the top level.
    pub recursive_calls: usize,
}

impl SolveStats {
    /// `d^|R|`, saturating.
    pub fn branch_space(&self, d: u32) -> u128 {
        (d as u128).checked_pow(self.separator_vars.len() as u32).unwrap_or(u128::MAX)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub answer: SolveAnswer,
    pub stats: SolveStats,
}

/// Accumulates branch answers under the decide/count/max combination rules.
struct Accumulator {
    mode: Mode,
    sat_witness: Option<Vec<Value>>,
    count: BigUint,
    best: Option<(usize, Vec<Value>)>,
}

impl Accumulator {
    fn new(mode: Mode) -> Self {
        Accumulator { mode, sat_witness: None, count: BigUint::zero(), best: None }
    }

    /// Returns true once a decide query is settled.
    fn add(&mut self, answer: SolveAnswer) -> bool {
        match answer {
            SolveAnswer::Decide { satisfiable: true, witness } => {
                self.sat_witness = witness;
                true
            }
            SolveAnswer::Decide { .. } => false,
            SolveAnswer::Count(c) => {
                self.count += c;
                false
            }
            SolveAnswer::Max { satisfied, witness } => {
                if self.best.as_ref().is_none_or(|(b, _)| satisfied > *b) {
                    self.best = Some((satisfied, witness.expect("max answers carry witnesses")));
                }
                false
            }
        }
    }

    fn finish(self) -> SolveAnswer {
        match self.mode {
            Mode::Decide => SolveAnswer::Decide { satisfiable: self.sat_witness.is_some(), witness: self.sat_witness },
            Mode::Count => SolveAnswer::Count(self.count),
            Mode::Max => {
                let (satisfied, witness) = self.best.expect("at least one branch is visited");
                SolveAnswer::Max { satisfied, witness: Some(witness) }
            }
        }
    }
}

/// Enumerates all assignments of `vars` (lexicographic, first variable most
/// significant), calling `f` until it returns true.
fn for_each_assignment(
    num_vars: usize,
    vars: &[usize],
    d: u32,
    mut f: impl FnMut(&PartialAssignment) -> Result<bool, CspError>,
) -> Result<(), CspError> {
    let mut rho = PartialAssignment::new(num_vars);
    for &x in vars {
        rho.set(x, 0);
    }
    loop {
        if f(&rho)? {
            return Ok(());
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            let x = vars[pos];
            let next = rho.get(x).unwrap() + 1;
            if next < d {
                rho.set(x, next);
                break;
            }
            rho.set(x, 0);
        }
    }
}

/// Exact decide/count/max via balanced-separator branching.
pub fn solve(csp: &Csp, mode: Mode, options: &SolveOptions) -> Result<Solved, CspError> {
    if options.leaf_budget == 0 {
        return Err(CspError::ZeroLeafBudget);
    }
    let mut stats = SolveStats::default();
    if !options.high_frequency_branching {
        let answer = solve_with_separator(csp, mode, options, options.seed, &mut stats)?;
        return Ok(Solved { answer, stats });
    }

    let (branch_vars, _) = high_frequency_preprocess(csp, csp.average_frequency());
    stats.preprocessed_vars = branch_vars.clone();
    let mut acc = Accumulator::new(mode);
    let mut inner = SolveStats::default();
    let mut index = 0u64;
    for_each_assignment(csp.num_vars, &branch_vars, csp.domain, |rho| {
        let restricted = csp.restrict(rho)?;
        let seed = derive_seed(options.seed, index);
        index += 1;
        let answer = solve_with_separator(&restricted, mode, options, seed, &mut inner)?;
        Ok(acc.add(with_rho(answer, rho)))
    })?;
    stats.recursive_calls = inner.recursive_calls;
    Ok(Solved { answer: acc.finish(), stats })
}

fn solve_with_separator(
    csp: &Csp,
    mode: Mode,
    options: &SolveOptions,
    seed: u64,
    stats: &mut SolveStats,
) -> Result<SolveAnswer, CspError> {
    let ch = csp.constraint_hypergraph();
    if ch.hypergraph.num_edges() == 0 {
        stats.branches = 1;
        return solve_pieces(csp, mode, options, seed, stats);
    }
    let sep = find_separator(&ch.hypergraph, options.separator, seed)?;
    let vars: Vec<usize> = sep.edges.iter().map(|&e| ch.edge_vars[e]).collect();
    stats.separator_vars = vars.clone();
    stats.separator_method = Some(sep.method);
    stats.separator_fallback = sep.fallback;
    stats.separator_bound = sep.size_bound_used;
    stats.branches = 0;

    let mut acc = Accumulator::new(mode);
    let mut branch = 0u64;
    for_each_assignment(csp.num_vars, &vars, csp.domain, |rho| {
        stats.branches += 1;
        let restricted = csp.restrict(rho)?;
        let answer = solve_pieces(&restricted, mode, options, derive_seed(seed, branch), stats)?;
        branch += 1;
        Ok(acc.add(with_rho(answer, rho)))
    })?;
    Ok(acc.finish())
}

/// Copies the values of `rho` into the witness of `answer`.
fn with_rho(answer: SolveAnswer, rho: &PartialAssignment) -> SolveAnswer {
    match answer {
        SolveAnswer::Decide { satisfiable, witness } => {
            SolveAnswer::Decide { satisfiable, witness: witness.map(|w| overlay(w, rho)) }
        }
        SolveAnswer::Max { satisfied, witness } => {
            SolveAnswer::Max { satisfied, witness: witness.map(|w| overlay(w, rho)) }
        }
        count => count,
    }
}

fn overlay(mut w: Vec<Value>, rho: &PartialAssignment) -> Vec<Value> {
    for (x, v) in rho.assigned() {
        w[x] = v;
    }
    w
}

/// Answers a CSP by splitting it into connected pieces and combining them.
fn solve_pieces(
    csp: &Csp,
    mode: Mode,
    options: &SolveOptions,
    seed: u64,
    stats: &mut SolveStats,
) -> Result<SolveAnswer, CspError> {
    let dec = csp.decompose();
    if dec.false_constants > 0 && mode != Mode::Max {
        return Ok(match mode {
            Mode::Decide => SolveAnswer::Decide { satisfiable: false, witness: None },
            _ => SolveAnswer::Count(BigUint::zero()),
        });
    }
    let mut witness = vec![0 as Value; csp.num_vars];
    let mut count = BigUint::one();
    let mut satisfied = dec.true_constants;
    for (i, part) in dec.parts.iter().enumerate() {
        let answer = if options.recursive && part.variables().len() > options.leaf_budget {
            stats.recursive_calls += 1;
            let mut sub = SolveStats::default();
            let a = solve_with_separator(part, mode, options, derive_seed(seed, i as u64), &mut sub)?;
            stats.recursive_calls += sub.recursive_calls;
            a
        } else {
            brute_force(part, mode, options.enumeration_budget)?
        };
        match answer {
            SolveAnswer::Decide { satisfiable: false, .. } => {
                return Ok(SolveAnswer::Decide { satisfiable: false, witness: None });
            }
            SolveAnswer::Count(c) if c.is_zero() => return Ok(SolveAnswer::Count(c)),
            SolveAnswer::Count(c) => count *= c,
            SolveAnswer::Decide { witness: w, .. } => copy_vars(&mut witness, w, part.variables()),
            SolveAnswer::Max { satisfied: s, witness: w } => {
                copy_vars(&mut witness, w, part.variables());
                satisfied += s;
            }
        }
    }
    Ok(match mode {
        Mode::Decide => SolveAnswer::Decide { satisfiable: true, witness: Some(witness) },
        Mode::Count => SolveAnswer::Count(count * BigUint::from(csp.domain).pow(dec.free_vars.len() as u32)),
        Mode::Max => SolveAnswer::Max { satisfied, witness: Some(witness) },
    })
}

fn copy_vars(into: &mut [Value], from: Option<Vec<Value>>, vars: &[usize]) {
    let from = from.expect("satisfiable pieces carry witnesses");
    for &x in vars {
        into[x] = from[x];
    }
}

/// Variables whose frequency is at least `ceil(2 r_avg)`, to be branched on
/// exhaustively, and the frequency bound left for everything else.
pub fn high_frequency_preprocess(csp: &Csp, r_avg: f64) -> (Vec<usize>, usize) {
    let threshold = (2.0 * r_avg).ceil().max(1.0) as usize;
    let f = csp.frequencies();
    let vars = csp.variables().iter().copied().filter(|&x| f[x] >= threshold).collect();
    (vars, threshold - 1)
}

/// CNF of a boolean CSP plus the clause bookkeeping the refuters need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCnf {
    pub cnf: Cnf,
    /// Originating constraint of each clause.
    pub clause_constraint: Vec<usize>,
    /// Index of each constraint's first clause.
    pub constraint_offset: Vec<usize>,
}

impl EncodedCnf {
    /// Clause excluding `tuple` on constraint `ci`, if that tuple is forbidden.
    pub fn clause_for(&self, csp: &Csp, ci: usize, tuple: &[Value]) -> Option<usize> {
        csp.constraints()[ci].forbidden_rank(tuple).map(|r| self.constraint_offset[ci] + r)
    }
}

/// One clause per forbidden tuple, falsified by exactly that tuple.
pub fn cnf_encode(csp: &Csp) -> Result<EncodedCnf, CspError> {
    if csp.domain != 2 {
        return Err(CspError::NotBoolean(csp.domain));
    }
    let mut clauses: Vec<Clause> = Vec::new();
    let mut clause_constraint = Vec::new();
    let mut constraint_offset = Vec::with_capacity(csp.constraints.len());
    for (ci, c) in csp.constraints.iter().enumerate() {
        constraint_offset.push(clauses.len());
        for t in c.forbidden_tuples() {
            clauses.push(c.scope.iter().zip(&t).map(|(&x, &v)| Lit::falsified_by(x, v == 1)).collect());
            clause_constraint.push(ci);
        }
    }
    Ok(EncodedCnf { cnf: Cnf::new(csp.num_vars, clauses), clause_constraint, constraint_offset })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    const BUDGET: u128 = 1 << 24;

    fn neq_csp(num_vars: usize, d: u32, pairs: &[(usize, usize)]) -> Csp {
        let cs = pairs.iter().map(|&(a, b)| Constraint::not_equal(a, b, d).unwrap()).collect();
        Csp::new(num_vars, d, cs).unwrap()
    }

    fn triangle(d: u32) -> Csp {
        neq_csp(3, d, &[(0, 1), (1, 2), (0, 2)])
    }

    fn count(a: &SolveAnswer) -> u64 {
        match a {
            SolveAnswer::Count(c) => c.try_into().unwrap(),
            _ => panic!("not a count"),
        }
    }

    fn all_option_sets() -> Vec<SolveOptions> {
        let mut out = Vec::new();
        for recursive in [false, true] {
            for separator in [SeparatorStrategy::Random { max_trials: 100 }, SeparatorStrategy::Exhaustive] {
                out.push(SolveOptions { recursive, separator, leaf_budget: 1, ..Default::default() });
            }
        }
        out.push(SolveOptions { high_frequency_branching: true, ..Default::default() });
        out
    }

    #[test]
    fn constraint_validation() {
        assert!(matches!(Constraint::new(vec![0], vec![vec![2]], 2), Err(CspError::ValueOutOfRange { .. })));
        assert!(matches!(Constraint::new(vec![0], vec![vec![0, 1]], 2), Err(CspError::TupleArity { .. })));
        assert!(matches!(Constraint::new(vec![0], vec![], 1), Err(CspError::DomainTooSmall(1))));
        let c = Constraint::new(vec![0, 1], vec![vec![1, 0], vec![0, 1], vec![1, 0]], 2).unwrap();
        assert_eq!(c.allowed(), &[vec![0, 1], vec![1, 0]]);
        assert_eq!(c.forbidden_tuples(), vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(c.forbidden_rank(&[1, 1]), Some(1));
        assert_eq!(c.forbidden_rank(&[1, 0]), None);
        let bad = Csp::new(2, 2, vec![Constraint::not_equal(0, 2, 2).unwrap()]);
        assert!(matches!(bad, Err(CspError::VarOutOfRange { .. })));
        let dup = Csp::new(2, 2, vec![Constraint::new(vec![1, 1], vec![], 2).unwrap()]);
        assert!(matches!(dup, Err(CspError::DuplicateScopeVar { .. })));
    }

    #[test]
    fn constraint_hypergraph_examples() {
        let ch = triangle(2).constraint_hypergraph();
        assert_eq!(ch.hypergraph.num_vertices(), 3);
        assert_eq!(ch.hypergraph.edges(), &[vec![0, 2], vec![0, 1], vec![1, 2]]);
        assert_eq!(ch.edge_vars, vec![0, 1, 2]);

        let one = Csp::new(1, 2, vec![Constraint::new(vec![0], vec![vec![1]], 2).unwrap()]).unwrap();
        let ch = one.constraint_hypergraph();
        assert_eq!(ch.hypergraph.edges(), &[vec![0]]);

        let free = Csp::new(3, 2, vec![Constraint::not_equal(0, 1, 2).unwrap()]).unwrap();
        assert_eq!(free.constraint_hypergraph().free_vars, vec![2]);
    }

    #[test]
    fn restrict_examples() {
        let t = triangle(3);
        assert_eq!(t.restrict(&PartialAssignment::new(3)).unwrap(), t);

        let r = neq_csp(2, 4, &[(0, 1)]).restrict(&PartialAssignment::from_pairs(2, &[(0, 0)])).unwrap();
        assert_eq!(r.constraints()[0].scope(), &[1]);
        assert_eq!(r.constraints()[0].allowed(), &[vec![1], vec![2], vec![3]]);
        assert_eq!(r.variables(), &[1]);

        let r = triangle(2).restrict(&PartialAssignment::from_pairs(3, &[(0, 0)])).unwrap();
        assert_eq!(r.constraints()[0].allowed(), &[vec![1]]);
        assert_eq!(r.constraints()[2].allowed(), &[vec![1]]);
        let ans = brute_force(&r, Mode::Decide, BUDGET).unwrap();
        assert_eq!(ans, SolveAnswer::Decide { satisfiable: false, witness: None });

        let bad = triangle(2).restrict(&PartialAssignment::from_pairs(3, &[(0, 2)]));
        assert!(matches!(bad, Err(CspError::ValueOutOfRange { .. })));
    }

    #[test]
    fn restricted_hypergraph_drops_assigned_edges() {
        let t = triangle(3);
        let r = t.restrict(&PartialAssignment::from_pairs(3, &[(1, 2)])).unwrap();
        let (expected, _) = t.constraint_hypergraph().hypergraph.remove_edges(&[1]).unwrap();
        assert_eq!(r.constraint_hypergraph().hypergraph, expected);
    }

    #[test]
    fn decompose_examples() {
        let two = neq_csp(6, 3, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let dec = two.decompose();
        assert_eq!(dec.parts.len(), 2);
        assert!(dec.parts.iter().all(|p| p.constraints().len() == 3));
        assert_eq!(dec.parts[1].variables(), &[3, 4, 5]);
        assert_eq!(dec.constraint_ids[1], vec![3, 4, 5]);
        assert_eq!(triangle(3).decompose().parts.len(), 1);

        let r = triangle(2).restrict(&PartialAssignment::from_pairs(3, &[(0, 0), (1, 0)])).unwrap();
        let dec = r.decompose();
        assert_eq!(dec.false_constants, 1);
        assert_eq!(dec.parts.len(), 1);
    }

    #[test]
    fn brute_force_triangle() {
        assert_eq!(brute_force(&triangle(2), Mode::Decide, BUDGET).unwrap(), SolveAnswer::Decide {
            satisfiable: false,
            witness: None
        });
        assert_eq!(count(&brute_force(&triangle(3), Mode::Count, BUDGET).unwrap()), 6);
        match brute_force(&triangle(2), Mode::Max, BUDGET).unwrap() {
            SolveAnswer::Max { satisfied, witness } => {
                assert_eq!(satisfied, 2);
                assert_eq!(witness, Some(vec![0, 0, 1]));
            }
            _ => unreachable!(),
        }
        match brute_force(&triangle(3), Mode::Decide, BUDGET).unwrap() {
            SolveAnswer::Decide { witness, .. } => assert_eq!(witness, Some(vec![0, 1, 2])),
            _ => unreachable!(),
        }
        assert!(matches!(brute_force(&triangle(3), Mode::Count, 26), Err(CspError::BudgetExceeded { .. })));
    }

    #[test]
    fn solve_named_examples() {
        for opts in all_option_sets() {
            let t3 = triangle(3);
            let s = solve(&t3, Mode::Decide, &opts).unwrap();
            assert!(t3.satisfies(s.answer.witness().unwrap()));
            assert_eq!(count(&solve(&t3, Mode::Count, &opts).unwrap().answer), 6);
            match solve(&t3, Mode::Max, &opts).unwrap().answer {
                SolveAnswer::Max { satisfied, .. } => assert_eq!(satisfied, 3),
                _ => unreachable!(),
            }
            let grid = neq_csp(4, 2, &[(0, 1), (1, 3), (3, 2), (2, 0)]);
            assert_eq!(count(&solve(&grid, Mode::Count, &opts).unwrap().answer), 2);
        }
    }

    #[test]
    fn solve_all_true_constraints() {
        let cs = vec![
            Constraint::from_predicate(vec![0, 1], 3, |_| true).unwrap(),
            Constraint::from_predicate(vec![1, 2], 3, |_| true).unwrap(),
        ];
        let csp = Csp::new(4, 3, cs).unwrap();
        let s = solve(&csp, Mode::Decide, &SolveOptions::default()).unwrap();
        assert!(matches!(s.answer, SolveAnswer::Decide { satisfiable: true, .. }));
        assert_eq!(count(&solve(&csp, Mode::Count, &SolveOptions::default()).unwrap().answer), 81);
    }

    #[test]
    fn solve_empty_and_constant_csps() {
        let empty = Csp::new(0, 2, vec![]).unwrap();
        let s = solve(&empty, Mode::Decide, &SolveOptions::default()).unwrap();
        assert!(matches!(s.answer, SolveAnswer::Decide { satisfiable: true, .. }));
        assert_eq!(count(&solve(&empty, Mode::Count, &SolveOptions::default()).unwrap().answer), 1);

        let falsum = Csp::new(2, 2, vec![Constraint::constant(false, 2).unwrap(), Constraint::constant(true, 2).unwrap()])
            .unwrap();
        assert_eq!(count(&solve(&falsum, Mode::Count, &SolveOptions::default()).unwrap().answer), 0);
        match solve(&falsum, Mode::Max, &SolveOptions::default()).unwrap().answer {
            SolveAnswer::Max { satisfied, .. } => assert_eq!(satisfied, 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn cycle_colorings_follow_chromatic_polynomial() {
        for n in 3..=8usize {
            for d in 2..=4u32 {
                let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                let csp = neq_csp(n, d, &pairs);
                let oracle = count(&brute_force(&csp, Mode::Count, BUDGET).unwrap());
                let sign: i64 = if n % 2 == 0 { 1 } else { -1 };
                let formula = (d as i64 - 1).pow(n as u32) + sign * (d as i64 - 1);
                assert_eq!(oracle as i64, formula, "C_{n}, d = {d}");
                let solved = solve(&csp, Mode::Count, &SolveOptions::default()).unwrap();
                assert_eq!(count(&solved.answer), oracle);
            }
        }
    }

    #[test]
    fn high_frequency_examples() {
        let uniform = neq_csp(4, 2, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let (vars, bound) = high_frequency_preprocess(&uniform, uniform.average_frequency());
        assert!(vars.is_empty());
        assert_eq!(bound, 3);

        // x0 in ten constraints, x1..x9 in one each.
        let mut cs = Vec::new();
        for i in 1..10 {
            cs.push(Constraint::not_equal(0, i, 2).unwrap());
        }
        cs.push(Constraint::new(vec![0], vec![vec![0]], 2).unwrap());
        let csp = Csp::new(10, 2, cs).unwrap();
        assert!((csp.average_frequency() - 1.9).abs() < 1e-12);
        let (vars, bound) = high_frequency_preprocess(&csp, csp.average_frequency());
        assert_eq!(vars, vec![0]);
        assert_eq!(bound, 3);
    }

    #[test]
    fn cnf_encode_examples() {
        let xor = Csp::new(2, 2, vec![Constraint::from_predicate(vec![0, 1], 2, |t| t[0] ^ t[1] == 1).unwrap()]).unwrap();
        let enc = cnf_encode(&xor).unwrap();
        assert_eq!(enc.cnf.clauses, vec![vec![Lit::pos(0), Lit::pos(1)], vec![Lit::neg(0), Lit::neg(1)]]);

        let taut = Csp::new(2, 2, vec![Constraint::from_predicate(vec![0, 1], 2, |_| true).unwrap()]).unwrap();
        assert!(cnf_encode(&taut).unwrap().cnf.clauses.is_empty());

        let enc = cnf_encode(&triangle(2)).unwrap();
        assert_eq!(enc.cnf.clauses.len(), 6);
        assert!(enc.cnf.brute_force_model().is_none());
        assert_eq!(enc.clause_for(&triangle(2), 1, &[1, 1]), Some(3));

        assert!(matches!(cnf_encode(&triangle(3)), Err(CspError::NotBoolean(3))));
    }

    pub(crate) fn arb_csp(max_vars: usize, max_d: u32) -> impl Strategy<Value = Csp> {
        (1..=max_vars, 2..=max_d).prop_flat_map(|(m, d)| {
            let constraint = (proptest::collection::btree_set(0..m, 0..=3usize.min(m)), any::<u64>());
            proptest::collection::vec(constraint, 0..8).prop_map(move |cs| {
                let constraints = cs
                    .into_iter()
                    .map(|(scope, bits)| {
                        let scope: Vec<usize> = scope.into_iter().collect();
                        let size = (d as usize).pow(scope.len() as u32);
                        let allowed = (0..size).filter(|i| bits >> (i % 64) & 1 == 1).map(|i| decode(i, d, scope.len())).collect();
                        Constraint::new(scope, allowed, d).unwrap()
                    })
                    .collect();
                Csp::new(m, d, constraints).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn solve_matches_brute_force(csp in arb_csp(7, 3), seed in any::<u64>()) {
            for mode in [Mode::Decide, Mode::Count, Mode::Max] {
                let oracle = brute_force(&csp, mode, BUDGET).unwrap();
                for opts in all_option_sets() {
                    let s = solve(&csp, mode, &SolveOptions { seed, ..opts }).unwrap();
                    prop_assert!(s.answer.same_value(&oracle), "{:?} vs {:?}", s.answer, oracle);
                    match &s.answer {
                        SolveAnswer::Decide { satisfiable: true, witness } => prop_assert!(csp.satisfies(witness.as_ref().unwrap())),
                        SolveAnswer::Max { satisfied, witness } => {
                            prop_assert_eq!(csp.count_satisfied(witness.as_ref().unwrap()), *satisfied)
                        }
                        _ => {}
                    }
                }
            }
        }

        #[test]
        fn restriction_commutes_with_satisfaction(csp in arb_csp(6, 3), code in any::<u64>(), mask in any::<u8>()) {
            let d = csp.domain();
            let m = csp.num_vars();
            let full: Vec<Value> = (0..m).map(|i| ((code >> (3 * i)) % d as u64) as Value).collect();
            let mut rho = PartialAssignment::new(m);
            for (x, &v) in full.iter().enumerate() {
                if mask >> x & 1 == 1 {
                    rho.set(x, v);
                }
            }
            let r = csp.restrict(&rho).unwrap();
            prop_assert_eq!(r.satisfies(&full), csp.satisfies(&full));
            prop_assert_eq!(r.count_satisfied(&full), csp.count_satisfied(&full));
            let unsat = matches!(brute_force(&csp, Mode::Decide, BUDGET).unwrap(), SolveAnswer::Decide { satisfiable: false, .. });
            if unsat {
                let r_unsat = matches!(brute_force(&r, Mode::Decide, BUDGET).unwrap(), SolveAnswer::Decide { satisfiable: false, .. });
                prop_assert!(r_unsat);
            }
        }

        #[test]
        fn cnf_encoding_preserves_models(csp in arb_csp(6, 2)) {
            let enc = cnf_encode(&csp).unwrap();
            prop_assert!(enc.cnf.clauses.len() <= csp.constraints().len() * (1 << csp.max_arity()));
            for code in 0u32..1 << csp.num_vars() {
                let a: Vec<Value> = (0..csp.num_vars()).map(|i| code >> i & 1).collect();
                let b: Vec<bool> = a.iter().map(|&v| v == 1).collect();
                prop_assert_eq!(csp.satisfies(&a), enc.cnf.is_satisfied_by(&b));
            }
        }

        #[test]
        fn high_frequency_set_is_at_most_half(csp in arb_csp(10, 2)) {
            let (vars, _) = high_frequency_preprocess(&csp, csp.average_frequency());
            prop_assert!(2 * vars.len() <= csp.variables().len());
        }
    }
}
