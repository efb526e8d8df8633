//! Decision trees, tree-like resolution, and two refuters built on balanced
//! separators.
//!
//! A decision tree for an unsatisfiable formula queries variables until the
//! partial assignment on the path falsifies some clause, which labels the
//! leaf. Such a tree converts bottom-up into a tree-like resolution
//! refutation with at most one step per tree node.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::cnf::{is_tautology, normalize, Clause, Cnf, Lit};
use crate::csp::{brute_force, cnf_encode, Csp, CspError, EncodedCnf, Mode, SolveAnswer, Value, DEFAULT_ENUMERATION_BUDGET};
use crate::hypergraph::Hypergraph;
use crate::separator::{epsilon_r, find_separator, vertex_cut_separator, SeparatorError, SeparatorStrategy};
use crate::tseitin::{ChargeLabeling, TseitinError, TseitinInstance};

/// Constant `C` in the Tseitin refuter's separator bound
/// `(1/2 - eps_2)|E'| + C k sqrt(|E'|)`.
pub const TSEITIN_SEPARATOR_CONSTANT: f64 = 6.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTree {
    /// Index of the clause (or constraint) falsified on this path.
    Leaf(usize),
    /// Queried variable and one child per domain value, in value order.
    Query { var: usize, children: Vec<DecisionTree> },
}

impl DecisionTree {
    pub fn leaves(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Query { children, .. } => children.iter().map(DecisionTree::leaves).sum(),
        }
    }

    /// Longest root-to-leaf path, counted in queries.
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Query { children, .. } => 1 + children.iter().map(DecisionTree::depth).max().unwrap_or(0),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Query { children, .. } => 1 + children.iter().map(DecisionTree::nodes).sum::<usize>(),
        }
    }

    /// Variables queried at nodes, in preorder.
    pub fn queries(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_queries(&mut out);
        out
    }

    fn collect_queries(&self, out: &mut Vec<usize>) {
        if let DecisionTree::Query { var, children } = self {
            out.push(*var);
            for c in children {
                c.collect_queries(out);
            }
        }
    }
}

/// What the leaves of a decision tree refer to.
#[derive(Debug, Clone, Copy)]
pub enum TreeSource<'a> {
    Cnf(&'a Cnf),
    Csp(&'a Csp),
}

impl TreeSource<'_> {
    fn domain(&self) -> u32 {
        match self {
            TreeSource::Cnf(_) => 2,
            TreeSource::Csp(c) => c.domain(),
        }
    }

    fn num_vars(&self) -> usize {
        match self {
            TreeSource::Cnf(c) => c.num_vars,
            TreeSource::Csp(c) => c.num_vars(),
        }
    }

    fn num_leaves_targets(&self) -> usize {
        match self {
            TreeSource::Cnf(c) => c.clauses.len(),
            TreeSource::Csp(c) => c.constraints().len(),
        }
    }

    fn falsified(&self, index: usize, path: &[Option<Value>]) -> bool {
        match self {
            TreeSource::Cnf(c) => c.clauses[index].iter().all(|l| path[l.var()].is_some_and(|v| !l.eval(v == 1))),
            TreeSource::Csp(c) => {
                let con = &c.constraints()[index];
                !con.allowed().iter().any(|t| con.scope().iter().zip(t).all(|(&x, &v)| path[x].is_none_or(|p| p == v)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DtreeViolationKind {
    RepeatedQuery(usize),
    VarOutOfRange(usize),
    WrongArity { var: usize, expected: usize, found: usize },
    LeafOutOfRange(usize),
    NotFalsified(usize),
}

/// First problem found by [`check_dtree`], with the path (variable, value)
/// leading to it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at path [{}]", format_path(.path))]
pub struct DtreeViolation {
    pub path: Vec<(usize, Value)>,
    pub kind: DtreeViolationKind,
}

/// `x3=1,x1=0` style, 1-based.
fn format_path(path: &[(usize, Value)]) -> String {
    path.iter().map(|(x, v)| format!("x{}={v}", x + 1)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for DtreeViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtreeViolationKind::RepeatedQuery(x) => write!(f, "variable {} queried twice", x + 1),
            DtreeViolationKind::VarOutOfRange(x) => write!(f, "variable {} out of range", x + 1),
            DtreeViolationKind::WrongArity { var, expected, found } => {
                write!(f, "node on variable {} has {found} children, expected {expected}", var + 1)
            }
            DtreeViolationKind::LeafOutOfRange(i) => write!(f, "leaf index {} out of range", i + 1),
            DtreeViolationKind::NotFalsified(i) => write!(f, "leaf {} is not falsified by its path", i + 1),
        }
    }
}

/// Checks that no path repeats a variable and that every leaf's clause or
/// constraint is falsified by its path.
pub fn check_dtree(source: TreeSource<'_>, tree: &DecisionTree) -> Result<(), DtreeViolation> {
    let mut path_values = vec![None; source.num_vars()];
    let mut path = Vec::new();
    check_node(&source, tree, &mut path_values, &mut path)
}

fn check_node(
    source: &TreeSource<'_>,
    node: &DecisionTree,
    values: &mut [Option<Value>],
    path: &mut Vec<(usize, Value)>,
) -> Result<(), DtreeViolation> {
    let fail = |path: &Vec<(usize, Value)>, kind| Err(DtreeViolation { path: path.clone(), kind });
    match node {
        DecisionTree::Leaf(i) => {
            if *i >= source.num_leaves_targets() {
                return fail(path, DtreeViolationKind::LeafOutOfRange(*i));
            }
            if !source.falsified(*i, values) {
                return fail(path, DtreeViolationKind::NotFalsified(*i));
            }
            Ok(())
        }
        DecisionTree::Query { var, children } => {
            let var = *var;
            if var >= values.len() {
                return fail(path, DtreeViolationKind::VarOutOfRange(var));
            }
            if values[var].is_some() {
                return fail(path, DtreeViolationKind::RepeatedQuery(var));
            }
            let d = source.domain() as usize;
            if children.len() != d {
                return fail(path, DtreeViolationKind::WrongArity { var, expected: d, found: children.len() });
            }
            for (b, child) in children.iter().enumerate() {
                values[var] = Some(b as Value);
                path.push((var, b as Value));
                let res = check_node(source, child, values, path);
                path.pop();
                values[var] = None;
                res?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StepKind {
    Axiom,
    /// Resolution of steps `left` and `right` (ids) on `pivot`.
    Resolve { left: usize, right: usize, pivot: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub id: usize,
    pub kind: StepKind,
    pub clause: Clause,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResolutionTrace {
    pub steps: Vec<Step>,
}

impl ResolutionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Longest clause in the trace.
    pub fn width(&self) -> usize {
        self.steps.iter().map(|s| s.clause.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolutionViolationKind {
    EmptyTrace,
    NonIncreasingId,
    AxiomNotInFormula,
    UnknownAntecedent(usize),
    AntecedentReused(usize),
    PivotMissing,
    Tautology,
    WrongResolvent,
    FinalClauseNotEmpty,
}

/// First problem found by [`check_resolution`]. `step` is the offending
/// step id (0 for an empty trace).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {kind}")]
pub struct ResolutionViolation {
    pub step: usize,
    pub kind: ResolutionViolationKind,
}

impl fmt::Display for ResolutionViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolutionViolationKind::EmptyTrace => f.write_str("trace is empty"),
            ResolutionViolationKind::NonIncreasingId => f.write_str("ids must increase strictly from 1"),
            ResolutionViolationKind::AxiomNotInFormula => f.write_str("axiom clause does not occur in the formula"),
            ResolutionViolationKind::UnknownAntecedent(id) => write!(f, "antecedent {id} is not an earlier step"),
            ResolutionViolationKind::AntecedentReused(id) => write!(f, "antecedent {id} already used (not tree-like)"),
            ResolutionViolationKind::PivotMissing => f.write_str("pivot does not occur with opposite signs"),
            ResolutionViolationKind::Tautology => f.write_str("resolvent is a tautology"),
            ResolutionViolationKind::WrongResolvent => f.write_str("clause is not the resolvent of its antecedents"),
            ResolutionViolationKind::FinalClauseNotEmpty => f.write_str("final clause is not empty"),
        }
    }
}

/// Verifies a tree-like resolution refutation of `cnf`.
pub fn check_resolution(cnf: &Cnf, trace: &ResolutionTrace) -> Result<(), ResolutionViolation> {
    let fail = |step, kind| Err(ResolutionViolation { step, kind });
    if trace.steps.is_empty() {
        return fail(0, ResolutionViolationKind::EmptyTrace);
    }
    let axioms: HashSet<Clause> = cnf.clauses.iter().map(|c| normalize(c)).collect();
    let mut clauses: HashMap<usize, Clause> = HashMap::new();
    let mut used: HashSet<usize> = HashSet::new();
    let mut prev = 0;
    for step in &trace.steps {
        let id = step.id;
        if id <= prev {
            return fail(id, ResolutionViolationKind::NonIncreasingId);
        }
        prev = id;
        let clause = normalize(&step.clause);
        match step.kind {
            StepKind::Axiom => {
                if !axioms.contains(&clause) {
                    return fail(id, ResolutionViolationKind::AxiomNotInFormula);
                }
            }
            StepKind::Resolve { left, right, pivot } => {
                for a in [left, right] {
                    if !clauses.contains_key(&a) {
                        return fail(id, ResolutionViolationKind::UnknownAntecedent(a));
                    }
                    if !used.insert(a) {
                        return fail(id, ResolutionViolationKind::AntecedentReused(a));
                    }
                }
                if left == right {
                    return fail(id, ResolutionViolationKind::AntecedentReused(left));
                }
                let (l, r) = (&clauses[&left], &clauses[&right]);
                let (p, n) = (Lit::pos(pivot), Lit::neg(pivot));
                let opposite = (l.contains(&p) && r.contains(&n)) || (l.contains(&n) && r.contains(&p));
                if !opposite {
                    return fail(id, ResolutionViolationKind::PivotMissing);
                }
                let resolvent: Clause =
                    normalize(&l.iter().chain(r.iter()).copied().filter(|x| x.var() != pivot).collect::<Vec<_>>());
                if is_tautology(&resolvent) {
                    return fail(id, ResolutionViolationKind::Tautology);
                }
                if resolvent != clause {
                    return fail(id, ResolutionViolationKind::WrongResolvent);
                }
            }
        }
        clauses.insert(id, clause);
    }
    let last = trace.steps.last().expect("non-empty");
    if !last.clause.is_empty() {
        return fail(last.id, ResolutionViolationKind::FinalClauseNotEmpty);
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefuteError {
    #[error("decision tree is not binary (node on variable {0})")]
    NonBinaryTree(usize),
    #[error("invalid decision tree: {0}")]
    InvalidTree(#[from] DtreeViolation),
    #[error("input is satisfiable")]
    Satisfiable { witness: Vec<bool> },
    #[error("charge labeling is even; the Tseitin formula is satisfiable")]
    EvenCharge,
    #[error("Tseitin refutation needs a simple graph: {0}")]
    NotSimpleGraph(String),
    #[error("no falsified clause on a complete branch")]
    LeafConstructionFailed,
    #[error("emitted proof failed verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Separator(#[from] SeparatorError),
    #[error(transparent)]
    Tseitin(#[from] TseitinError),
}

enum Derivation {
    Axiom(Clause),
    Resolve { left: Box<Derivation>, right: Box<Derivation>, pivot: usize, clause: Clause },
}

impl Derivation {
    fn clause(&self) -> &Clause {
        match self {
            Derivation::Axiom(c) | Derivation::Resolve { clause: c, .. } => c,
        }
    }
}

/// Converts a valid binary decision tree for `cnf` into a tree-like
/// resolution refutation. A child whose clause does not mention the queried
/// variable is passed up unchanged and its sibling subtree is discarded.
pub fn dtree_to_resolution(cnf: &Cnf, tree: &DecisionTree) -> Result<ResolutionTrace, RefuteError> {
    check_binary(tree)?;
    check_dtree(TreeSource::Cnf(cnf), tree)?;
    let derivation = derive(cnf, tree);
    let mut trace = ResolutionTrace::default();
    emit(derivation, &mut trace);
    Ok(trace)
}

fn check_binary(tree: &DecisionTree) -> Result<(), RefuteError> {
    match tree {
        DecisionTree::Leaf(_) => Ok(()),
        DecisionTree::Query { var, children } => {
            if children.len() != 2 {
                return Err(RefuteError::NonBinaryTree(*var));
            }
            children.iter().try_for_each(check_binary)
        }
    }
}

fn derive(cnf: &Cnf, node: &DecisionTree) -> Derivation {
    match node {
        DecisionTree::Leaf(i) => Derivation::Axiom(normalize(&cnf.clauses[*i])),
        DecisionTree::Query { var, children } => {
            // The 0-branch clause is falsified by var = 0, so it can only
            // contain the positive literal; symmetrically for the 1-branch.
            let zero = derive(cnf, &children[0]);
            if !zero.clause().contains(&Lit::pos(*var)) {
                return zero;
            }
            let one = derive(cnf, &children[1]);
            if !one.clause().contains(&Lit::neg(*var)) {
                return one;
            }
            let clause = normalize(
                &zero.clause().iter().chain(one.clause().iter()).copied().filter(|l| l.var() != *var).collect::<Vec<_>>(),
            );
            Derivation::Resolve { left: Box::new(zero), right: Box::new(one), pivot: *var, clause }
        }
    }
}

fn emit(d: Derivation, trace: &mut ResolutionTrace) -> usize {
    let (kind, clause) = match d {
        Derivation::Axiom(clause) => (StepKind::Axiom, clause),
        Derivation::Resolve { left, right, pivot, clause } => {
            let left = emit(*left, trace);
            let right = emit(*right, trace);
            (StepKind::Resolve { left, right, pivot }, clause)
        }
    };
    let id = trace.steps.len() + 1;
    trace.steps.push(Step { id, kind, clause });
    id
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefuterStats {
    pub leaves: usize,
    pub depth: usize,
    pub proof_size: usize,
    pub proof_width: usize,
    /// `(|E'|, |R|)` for every separator computed.
    pub separators_used: Vec<(usize, usize)>,
    /// Separator searches that had to fall back to a weaker size bound.
    pub bound_relaxations: usize,
    /// Separator lookups answered from the memo table.
    pub memo_hits: usize,
}

impl RefuterStats {
    /// Single-line `key=value` record.
    pub fn to_record(&self) -> String {
        let seps: Vec<String> = self.separators_used.iter().map(|(e, r)| format!("{e}:{r}")).collect();
        format!(
            "leaves={} depth={} proof_size={} proof_width={} separators_used={} bound_relaxations={} memo_hits={}",
            self.leaves,
            self.depth,
            self.proof_size,
            self.proof_width,
            if seps.is_empty() { "-".to_string() } else { seps.join(",") },
            self.bound_relaxations,
            self.memo_hits
        )
    }
}

/// A verified refutation: the tree, its resolution trace, and the CNF both
/// refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Refutation {
    pub cnf: Cnf,
    pub tree: DecisionTree,
    pub trace: ResolutionTrace,
    pub stats: RefuterStats,
}

fn finish(cnf: Cnf, tree: DecisionTree, mut stats: RefuterStats) -> Result<Refutation, RefuteError> {
    let trace = dtree_to_resolution(&cnf, &tree)?;
    check_resolution(&cnf, &trace).map_err(|v| RefuteError::Verification(v.to_string()))?;
    stats.leaves = tree.leaves();
    stats.depth = tree.depth();
    stats.proof_size = trace.len();
    stats.proof_width = trace.width();
    Ok(Refutation { cnf, tree, trace, stats })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Csp2Options {
    pub separator: SeparatorStrategy,
    pub seed: u64,
    pub enumeration_budget: u128,
}

impl Default for Csp2Options {
    fn default() -> Self {
        Csp2Options { separator: SeparatorStrategy::default(), seed: 0, enumeration_budget: DEFAULT_ENUMERATION_BUDGET }
    }
}

/// Refutes an unsatisfiable boolean CSP: a complete tree over the separator
/// variables, then below each branch a complete tree over the variables of
/// one unsatisfiable piece. Paths stop at the first falsified constraint.
pub fn refute_csp2(csp: &Csp, options: &Csp2Options) -> Result<Refutation, RefuteError> {
    let enc = cnf_encode(csp)?;
    let ch = csp.constraint_hypergraph();
    let mut stats = RefuterStats::default();
    let sep_vars: Vec<usize> = if ch.hypergraph.num_edges() == 0 {
        Vec::new()
    } else {
        let sep = find_separator(&ch.hypergraph, options.separator, options.seed)?;
        stats.separators_used.push((ch.hypergraph.num_edges(), sep.size()));
        stats.bound_relaxations += sep.fallback as usize;
        sep.edges.iter().map(|&e| ch.edge_vars[e]).collect()
    };
    let mut occ = vec![Vec::new(); csp.num_vars()];
    for (ci, c) in csp.constraints().iter().enumerate() {
        for &x in c.scope() {
            occ[x].push(ci);
        }
    }
    let mut builder = Csp2Builder {
        csp,
        enc: &enc,
        occ,
        values: vec![None; csp.num_vars()],
        budget: options.enumeration_budget,
    };
    // Zero-arity false constraints refute immediately.
    let tree = match (0..csp.constraints().len()).find(|&ci| csp.constraints()[ci].is_constant() == Some(false)) {
        Some(ci) => DecisionTree::Leaf(enc.constraint_offset[ci]),
        None => builder.separator_tree(&sep_vars)?,
    };
    finish(enc.cnf, tree, stats)
}

struct Csp2Builder<'a> {
    csp: &'a Csp,
    enc: &'a EncodedCnf,
    occ: Vec<Vec<usize>>,
    values: Vec<Option<Value>>,
    budget: u128,
}

impl Csp2Builder<'_> {
    /// Clause of the lowest-index constraint containing `x` that the current
    /// assignment fully assigns and violates.
    fn falsified_through(&self, x: usize) -> Option<usize> {
        self.occ[x].iter().find_map(|&ci| {
            let c = &self.csp.constraints()[ci];
            let tuple: Option<Vec<Value>> = c.scope().iter().map(|&y| self.values[y]).collect();
            tuple.and_then(|t| self.enc.clause_for(self.csp, ci, &t))
        })
    }

    /// Complete tree over `vars` with early leaves; `then` builds the
    /// subtree below a full assignment of `vars`.
    fn query_all(
        &mut self,
        vars: &[usize],
        then: &mut dyn FnMut(&mut Self) -> Result<DecisionTree, RefuteError>,
    ) -> Result<DecisionTree, RefuteError> {
        let Some((&x, rest)) = vars.split_first() else {
            return then(self);
        };
        let mut children = Vec::with_capacity(2);
        for b in 0..2 {
            self.values[x] = Some(b);
            let child = match self.falsified_through(x) {
                Some(clause) => Ok(DecisionTree::Leaf(clause)),
                None => self.query_all(rest, then),
            };
            self.values[x] = None;
            children.push(child?);
        }
        Ok(DecisionTree::Query { var: x, children })
    }

    fn separator_tree(&mut self, sep_vars: &[usize]) -> Result<DecisionTree, RefuteError> {
        self.query_all(sep_vars, &mut |b: &mut Self| b.piece_tree())
    }

    /// Below a separator branch: find an unsatisfiable piece and query all of
    /// its variables.
    fn piece_tree(&mut self) -> Result<DecisionTree, RefuteError> {
        let mut rho = crate::csp::PartialAssignment::new(self.csp.num_vars());
        for (x, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                rho.set(x, *v);
            }
        }
        let restricted = self.csp.restrict(&rho)?;
        let dec = restricted.decompose();
        let mut witness: Vec<bool> = self.values.iter().map(|v| v == &Some(1)).collect();
        for part in &dec.parts {
            match brute_force(part, Mode::Decide, self.budget)? {
                SolveAnswer::Decide { satisfiable: false, .. } => {
                    let vars = part.variables().to_vec();
                    return self.query_all(&vars, &mut |_: &mut Self| Err(RefuteError::LeafConstructionFailed));
                }
                SolveAnswer::Decide { witness: Some(w), .. } => {
                    for &x in part.variables() {
                        witness[x] = w[x] == 1;
                    }
                }
                _ => unreachable!("decide answers"),
            }
        }
        Err(RefuteError::Satisfiable { witness })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TseitinOptions {
    /// Subgraphs with at most this many edges are finished by querying every
    /// remaining edge. Defaults to `k sqrt(m)`.
    pub base_threshold: Option<f64>,
}

/// `log2` of the leaf bound `2^((1 - 2 eps_2) m + 4 C k sqrt(m) + k sqrt(m))`
/// the Tseitin refuter's trees obey on a graph with `m` edges and maximum
/// degree `k`.
pub fn tseitin_leaf_bound_log2(m: usize, k: usize) -> f64 {
    let eps = epsilon_r(2).expect("r = 2");
    let (m, k) = (m as f64, k as f64);
    (1.0 - 2.0 * eps) * m + 4.0 * TSEITIN_SEPARATOR_CONSTANT * k * m.sqrt() + k * m.sqrt()
}

/// How the refuter proceeds from a subgraph, decided from its edge set
/// alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Plan {
    /// Query these edges in order, then the subgraph is exhausted.
    Exhaust(Vec<usize>),
    /// Query one edge and continue on the rest.
    Single(usize),
    /// Query the separator edges, then descend into an odd component.
    Separate(Vec<usize>),
}

/// Edge set at each step with the plan chosen for it.
pub(crate) type PlanLog = Vec<(Vec<usize>, Plan)>;

/// Deterministic refuter for Tseitin formulas on simple graphs.
pub fn refute_tseitin(g: &Hypergraph, charges: &ChargeLabeling, options: &TseitinOptions) -> Result<Refutation, RefuteError> {
    Ok(TseitinRefuter::new(g, charges, options)?.run()?.0)
}

pub(crate) struct TseitinRefuter<'a> {
    g: &'a Hypergraph,
    csp: Csp,
    enc: EncodedCnf,
    incidence: Vec<Vec<usize>>,
    charge: Vec<bool>,
    assigned: Vec<Option<bool>>,
    unassigned_degree: Vec<usize>,
    threshold: f64,
    max_degree: usize,
    memo: HashMap<Vec<usize>, Vec<usize>>,
    stats: RefuterStats,
    pub(crate) plans: Option<PlanLog>,
}

impl<'a> TseitinRefuter<'a> {
    pub(crate) fn new(g: &'a Hypergraph, charges: &ChargeLabeling, options: &TseitinOptions) -> Result<Self, RefuteError> {
        if let Some(i) = g.edges().iter().position(|e| e.len() != 2) {
            return Err(RefuteError::NotSimpleGraph(format!("edge {} has size {}", i + 1, g.edge(i).len())));
        }
        let mut seen = HashSet::new();
        for (i, e) in g.edges().iter().enumerate() {
            if !seen.insert(e.clone()) {
                return Err(RefuteError::NotSimpleGraph(format!("edge {} repeats an earlier edge", i + 1)));
            }
        }
        let instance = TseitinInstance::new(g.clone(), charges.clone())?;
        if !charges.is_odd_charge() {
            return Err(RefuteError::EvenCharge);
        }
        let csp = instance.to_csp();
        let enc = instance.to_cnf();
        let incidence = g.incidence();
        let unassigned_degree = incidence.iter().map(Vec::len).collect();
        let max_degree = g.max_degree();
        let m = g.num_edges() as f64;
        Ok(TseitinRefuter {
            g,
            csp,
            enc,
            incidence,
            charge: charges.bits().to_vec(),
            assigned: vec![None; g.num_edges()],
            unassigned_degree,
            threshold: options.base_threshold.unwrap_or(max_degree as f64 * m.sqrt()),
            max_degree,
            memo: HashMap::new(),
            stats: RefuterStats::default(),
            plans: None,
        })
    }

    pub(crate) fn run(mut self) -> Result<(Refutation, Option<PlanLog>), RefuteError> {
        let root_leaf = (0..self.g.num_vertices()).find(|&v| self.unassigned_degree[v] == 0 && self.charge[v]);
        let tree = match root_leaf {
            Some(v) => DecisionTree::Leaf(self.violated_clause(v)),
            None => {
                let edges: Vec<usize> = (0..self.g.num_edges()).collect();
                self.node(&edges)?
            }
        };
        let plans = self.plans.take();
        Ok((finish(self.enc.cnf, tree, self.stats)?, plans))
    }

    fn violated_clause(&self, v: usize) -> usize {
        let tuple: Vec<Value> =
            self.incidence[v].iter().map(|&e| self.assigned[e].expect("all incident edges assigned") as Value).collect();
        self.enc.clause_for(&self.csp, v, &tuple).expect("charge 1 on an exhausted vertex means a wrong parity")
    }

    fn assign(&mut self, e: usize, b: bool) {
        self.assigned[e] = Some(b);
        for &v in self.g.edge(e) {
            self.unassigned_degree[v] -= 1;
            self.charge[v] ^= b;
        }
    }

    fn unassign(&mut self, e: usize, b: bool) {
        self.assigned[e] = None;
        for &v in self.g.edge(e) {
            self.unassigned_degree[v] += 1;
            self.charge[v] ^= b;
        }
    }

    /// Lowest endpoint of `e` whose parity is now violated.
    fn leaf_after(&self, e: usize) -> Option<usize> {
        self.g.edge(e).iter().copied().find(|&v| self.unassigned_degree[v] == 0 && self.charge[v])
    }

    /// Subtree for the subgraph spanned by `edges` (sorted) under the
    /// current charges.
    fn node(&mut self, edges: &[usize]) -> Result<DecisionTree, RefuteError> {
        let plan = self.plan(edges)?;
        if let Some(plans) = self.plans.as_mut() {
            plans.push((edges.to_vec(), plan.clone()));
        }
        match plan {
            Plan::Exhaust(order) => self.query_sequence(&order, &mut |_, _| Err(RefuteError::LeafConstructionFailed)),
            Plan::Single(e) => {
                let rest: Vec<usize> = edges.iter().copied().filter(|&x| x != e).collect();
                self.query_sequence(&[e], &mut |r: &mut Self, _| r.node(&rest))
            }
            Plan::Separate(sep) => {
                let removed: HashSet<usize> = sep.iter().copied().collect();
                let rest: Vec<usize> = edges.iter().copied().filter(|x| !removed.contains(x)).collect();
                self.query_sequence(&sep, &mut |r: &mut Self, _| r.descend(&rest))
            }
        }
    }

    /// After a separator: continue inside a component of `edges` with odd
    /// total charge.
    fn descend(&mut self, edges: &[usize]) -> Result<DecisionTree, RefuteError> {
        let sub = Hypergraph::new(self.g.num_vertices(), edges.iter().map(|&e| self.g.edge(e).to_vec()).collect())
            .expect("subgraph of a valid graph");
        let dec = sub.connected_components();
        for comp in &dec.components {
            let odd = comp.vertices.iter().fold(false, |acc, &v| acc ^ self.charge[v]);
            if odd {
                let comp_edges: Vec<usize> = comp.edges.iter().map(|&i| edges[i]).collect();
                return self.node(&comp_edges);
            }
        }
        // Only isolated vertices could carry the odd charge, and those are
        // caught as leaves when their last edge is queried.
        Err(RefuteError::LeafConstructionFailed)
    }

    /// Queries `order` one edge at a time, stopping at violated parities;
    /// `then` continues once every edge is assigned.
    fn query_sequence(
        &mut self,
        order: &[usize],
        then: &mut dyn FnMut(&mut Self, ()) -> Result<DecisionTree, RefuteError>,
    ) -> Result<DecisionTree, RefuteError> {
        let Some((&e, rest)) = order.split_first() else {
            return then(self, ());
        };
        let mut children = Vec::with_capacity(2);
        for b in [false, true] {
            self.assign(e, b);
            let child = match self.leaf_after(e) {
                Some(v) => Ok(DecisionTree::Leaf(self.violated_clause(v))),
                None => self.query_sequence(rest, then),
            };
            self.unassign(e, b);
            children.push(child?);
        }
        Ok(DecisionTree::Query { var: e, children })
    }

    /// Chooses the next step from the edge set only; charges are never read.
    fn plan(&mut self, edges: &[usize]) -> Result<Plan, RefuteError> {
        if edges.len() as f64 <= self.threshold {
            return Ok(Plan::Exhaust(edges.to_vec()));
        }
        let mut degree: HashMap<usize, Vec<usize>> = HashMap::new();
        for &e in edges {
            for &v in self.g.edge(e) {
                degree.entry(v).or_default().push(e);
            }
        }
        for target in [1, 2] {
            let pick = degree.iter().filter(|(_, es)| es.len() == target).map(|(&v, es)| (v, es)).min_by_key(|(v, _)| *v);
            if let Some((_, es)) = pick {
                return Ok(Plan::Single(*es.iter().min().expect("non-empty")));
            }
        }
        Ok(Plan::Separate(self.separator(edges)?))
    }

    fn separator(&mut self, edges: &[usize]) -> Result<Vec<usize>, RefuteError> {
        if let Some(sep) = self.memo.get(edges) {
            self.stats.memo_hits += 1;
            return Ok(sep.clone());
        }
        let mut vertices: Vec<usize> = edges.iter().flat_map(|&e| self.g.edge(e).iter().copied()).collect();
        vertices.sort_unstable();
        vertices.dedup();
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let sub = Hypergraph::new(
            vertices.len(),
            edges.iter().map(|&e| self.g.edge(e).iter().map(|v| local[v]).collect()).collect(),
        )
        .expect("relabeled subgraph is valid");

        let m = edges.len() as f64;
        let eps = epsilon_r(2)?;
        let bound = (0.5 - eps) * m + TSEITIN_SEPARATOR_CONSTANT * self.max_degree as f64 * m.sqrt();
        let found = match vertex_cut_separator(&sub, bound) {
            Ok(Some(res)) => Some(res.edges),
            Ok(None) => {
                self.stats.bound_relaxations += 1;
                vertex_cut_separator(&sub, (edges.len() / 2) as f64)?.map(|res| res.edges)
            }
            Err(SeparatorError::TooManyVertices { .. }) => {
                self.stats.bound_relaxations += 1;
                Some(find_separator(&sub, SeparatorStrategy::default(), 0)?.edges)
            }
            Err(e) => return Err(e.into()),
        };
        let local_sep = found.unwrap_or_else(|| {
            self.stats.bound_relaxations += 1;
            (0..edges.len().div_ceil(2)).collect()
        });
        let sep: Vec<usize> = local_sep.iter().map(|&i| edges[i]).collect();
        self.stats.separators_used.push((edges.len(), sep.len()));
        self.memo.insert(edges.to_vec(), sep.clone());
        Ok(sep)
    }
}
