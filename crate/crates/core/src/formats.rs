//! Text formats. Vertex, variable, edge, clause and step numbers are 1-based
//! in files and 0-based in memory.
//!
//! - `.hg`: `p hg <n> <m>`, then one line per edge with strictly increasing
//!   vertex ids.
//! - `.csp`: `p csp <vars> <d> <constraints>`, then per constraint a line
//!   `<arity> <v1> .. <v_arity> <t>` followed by `t` allowed tuples.
//! - DIMACS CNF, optionally with `c <label> <i>` lines before each block of
//!   clauses from the same source constraint.
//! - `.dt`: `p dt <d>`, then the tree in preorder as `n <var>` and
//!   `l <clause>` lines.
//! - `.res`: `<id> a <lits> 0` and `<id> r <id1> <id2> <pivot> <lits> 0`.
//! - Charge files: `<vertex> <bit>` lines; vertices not listed get 0.
//!
//! Lines starting with `c` are comments everywhere.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cnf::{Clause, Cnf, Lit};
use crate::csp::{Constraint, Csp, Value};
use crate::hypergraph::Hypergraph;
use crate::refutation::{DecisionTree, ResolutionTrace, Step, StepKind};
use crate::tseitin::ChargeLabeling;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based line number; 0 when the problem is the end of input.
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t == "c" || t.starts_with("c ") || t.starts_with("c\t")
}

/// Non-comment lines with their 1-based numbers, blank lines kept.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !is_comment(l))
}

/// Whitespace tokens of the non-comment lines, with line numbers.
struct Tokens<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let tokens = content_lines(text).flat_map(|(n, l)| l.split_whitespace().map(move |t| (n, t))).collect();
        Tokens { tokens, pos: 0 }
    }

    fn line(&self) -> usize {
        self.tokens.get(self.pos).or(self.tokens.last()).map_or(0, |t| t.0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        match self.tokens.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => err(0, format!("unexpected end of input, expected {what}")),
        }
    }

    fn expect(&mut self, word: &str) -> Result<(), ParseError> {
        let (line, t) = self.next(word)?;
        if t != word {
            return err(line, format!("expected `{word}`, found `{t}`"));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<(usize, T), ParseError> {
        let (line, t) = self.next(what)?;
        match t.parse() {
            Ok(v) => Ok((line, v)),
            Err(_) => err(line, format!("expected {what}, found `{t}`")),
        }
    }

    fn index(&mut self, what: &str, bound: usize) -> Result<usize, ParseError> {
        let (line, v) = self.parse::<usize>(what)?;
        if v == 0 || v > bound {
            return err(line, format!("{what} {v} out of range 1..={bound}"));
        }
        Ok(v - 1)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(&(line, t)) => err(line, format!("unexpected trailing token `{t}`")),
            None => Ok(()),
        }
    }
}

pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut out = format!("p hg {} {}\n", h.num_vertices(), h.num_edges());
    for e in h.edges() {
        let line: Vec<String> = e.iter().map(|v| (v + 1).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph, ParseError> {
    let mut lines = content_lines(text).filter(|(_, l)| !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else {
        return err(0, "missing `p hg <n> <m>` header");
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match fields.as_slice() {
        ["p", "hg", n, m] => match (n.parse::<usize>(), m.parse::<usize>()) {
            (Ok(n), Ok(m)) => (n, m),
            _ => return err(hline, "malformed `p hg <n> <m>` header"),
        },
        _ => return err(hline, "malformed `p hg <n> <m>` header"),
    };
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        if edges.len() == m {
            return err(line, format!("more than the declared {m} edges"));
        }
        let mut edge = Vec::new();
        for t in text.split_whitespace() {
            let v: usize = match t.parse() {
                Ok(v) => v,
                Err(_) => return err(line, format!("bad vertex id `{t}`")),
            };
            if v == 0 || v > n {
                return err(line, format!("vertex {v} out of range 1..={n}"));
            }
            if edge.last().is_some_and(|&last| v - 1 <= last) {
                return err(line, "vertex ids must be strictly increasing");
            }
            edge.push(v - 1);
        }
        edges.push(edge);
    }
    if edges.len() != m {
        return err(0, format!("expected {m} edges, found {}", edges.len()));
    }
    Hypergraph::new(n, edges).or_else(|e| err(hline, e.to_string()))
}

pub fn write_csp(csp: &Csp) -> String {
    let mut out = format!("p csp {} {} {}\n", csp.num_vars(), csp.domain(), csp.constraints().len());
    for c in csp.constraints() {
        let mut head = vec![c.arity().to_string()];
        head.extend(c.scope().iter().map(|x| (x + 1).to_string()));
        head.push(c.allowed().len().to_string());
        out.push_str(&head.join(" "));
        out.push('\n');
        for t in c.allowed() {
            let line: Vec<String> = t.iter().map(Value::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn parse_csp(text: &str) -> Result<Csp, ParseError> {
    let mut tok = Tokens::new(text);
    tok.expect("p")?;
    tok.expect("csp")?;
    let (_, num_vars) = tok.parse::<usize>("variable count")?;
    let (dline, d) = tok.parse::<u32>("domain size")?;
    if d < 2 {
        return err(dline, format!("domain size must be at least 2, got {d}"));
    }
    let (_, count) = tok.parse::<usize>("constraint count")?;
    let mut constraints = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let line = tok.line();
        let (_, arity) = tok.parse::<usize>("arity")?;
        let scope: Vec<usize> = (0..arity).map(|_| tok.index("variable", num_vars)).collect::<Result<_, _>>()?;
        let (_, t) = tok.parse::<usize>("tuple count")?;
        let mut allowed = Vec::with_capacity(t.min(1 << 16));
        for _ in 0..t {
            let tuple: Vec<Value> = (0..arity)
                .map(|_| {
                    let (l, v) = tok.parse::<Value>("value")?;
                    if v >= d {
                        return err(l, format!("value {v} out of range for d = {d}"));
                    }
                    Ok(v)
                })
                .collect::<Result<_, _>>()?;
            allowed.push(tuple);
        }
        constraints.push(Constraint::new(scope, allowed, d).or_else(|e| err(line, e.to_string()))?);
    }
    tok.finish()?;
    Csp::new(num_vars, d, constraints).or_else(|e| err(0, e.to_string()))
}

/// DIMACS CNF. With `provenance = Some((label, source))`, a `c <label> <i>`
/// line precedes each maximal run of clauses with equal `source` (1-based).
pub fn write_dimacs(cnf: &Cnf, provenance: Option<(&str, &[usize])>) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len());
    let mut last = None;
    for (i, clause) in cnf.clauses.iter().enumerate() {
        if let Some((label, source)) = provenance {
            if last != Some(source[i]) {
                writeln!(out, "c {label} {}", source[i] + 1).expect("writing to a String");
                last = Some(source[i]);
            }
        }
        for l in clause {
            write!(out, "{l} ").expect("writing to a String");
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<Cnf, ParseError> {
    let mut tok = Tokens::new(text);
    tok.expect("p")?;
    tok.expect("cnf")?;
    let (_, num_vars) = tok.parse::<usize>("variable count")?;
    let (_, count) = tok.parse::<usize>("clause count")?;
    let mut clauses = Vec::with_capacity(count.min(1 << 20));
    let mut current = Vec::new();
    while tok.pos < tok.tokens.len() {
        let (line, x) = tok.parse::<i64>("literal")?;
        match Lit::from_dimacs(x) {
            None => clauses.push(std::mem::take(&mut current)),
            Some(l) if l.var() < num_vars => current.push(l),
            Some(_) => return err(line, format!("literal {x} exceeds {num_vars} variables")),
        }
    }
    if !current.is_empty() {
        return err(0, "last clause is not terminated by 0");
    }
    if clauses.len() != count {
        return err(0, format!("expected {count} clauses, found {}", clauses.len()));
    }
    Ok(Cnf::new(num_vars, clauses))
}

pub fn write_dtree(tree: &DecisionTree, d: u32) -> String {
    let mut out = format!("p dt {d}\n");
    let mut stack = vec![tree];
    while let Some(node) = stack.pop() {
        match node {
            DecisionTree::Leaf(i) => writeln!(out, "l {}", i + 1),
            DecisionTree::Query { var, children } => {
                stack.extend(children.iter().rev());
                writeln!(out, "n {}", var + 1)
            }
        }
        .expect("writing to a String");
    }
    out
}

/// Returns the tree and its arity `d`.
pub fn parse_dtree(text: &str) -> Result<(DecisionTree, u32), ParseError> {
    let mut tok = Tokens::new(text);
    tok.expect("p")?;
    tok.expect("dt")?;
    let (dline, d) = tok.parse::<u32>("arity")?;
    if d < 2 {
        return err(dline, format!("arity must be at least 2, got {d}"));
    }
    // Frames of (var, children so far); a finished node is attached to the
    // frame on top.
    let mut stack: Vec<(usize, Vec<DecisionTree>)> = Vec::new();
    let mut root = None;
    loop {
        if root.is_some() {
            tok.finish()?;
            break;
        }
        let (line, kind) = tok.next("node")?;
        let mut done = match kind {
            "n" => {
                stack.push((tok.index("variable", usize::MAX)?, Vec::new()));
                continue;
            }
            "l" => DecisionTree::Leaf(tok.index("clause index", usize::MAX)?),
            other => return err(line, format!("expected `n` or `l`, found `{other}`")),
        };
        loop {
            match stack.last_mut() {
                None => {
                    root = Some(done);
                    break;
                }
                Some((_, children)) => {
                    children.push(done);
                    if children.len() < d as usize {
                        break;
                    }
                    let (var, children) = stack.pop().expect("non-empty");
                    done = DecisionTree::Query { var, children };
                }
            }
        }
    }
    Ok((root.expect("loop ends with a root"), d))
}

pub fn write_resolution(trace: &ResolutionTrace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        match step.kind {
            StepKind::Axiom => write!(out, "{} a ", step.id),
            StepKind::Resolve { left, right, pivot } => write!(out, "{} r {left} {right} {} ", step.id, pivot + 1),
        }
        .expect("writing to a String");
        for l in &step.clause {
            write!(out, "{l} ").expect("writing to a String");
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_resolution(text: &str) -> Result<ResolutionTrace, ParseError> {
    let mut steps = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tok = Tokens::new(content);
        if tok.tokens.is_empty() {
            continue;
        }
        let at = |e: ParseError| ParseError { line, ..e };
        let (_, id) = tok.parse::<usize>("step id").map_err(at)?;
        let (_, kind) = tok.next("step kind").map_err(at)?;
        let kind = match kind {
            "a" => StepKind::Axiom,
            "r" => {
                let (_, left) = tok.parse::<usize>("antecedent id").map_err(at)?;
                let (_, right) = tok.parse::<usize>("antecedent id").map_err(at)?;
                let pivot = tok.index("pivot variable", usize::MAX).map_err(at)?;
                StepKind::Resolve { left, right, pivot }
            }
            other => return err(line, format!("expected `a` or `r`, found `{other}`")),
        };
        let mut clause: Clause = Vec::new();
        loop {
            let (_, x) = tok.parse::<i64>("literal").map_err(at)?;
            match Lit::from_dimacs(x) {
                Some(l) => clause.push(l),
                None => break,
            }
        }
        tok.finish().map_err(at)?;
        steps.push(Step { id, kind, clause });
    }
    Ok(ResolutionTrace { steps })
}

pub fn write_charges(charges: &ChargeLabeling) -> String {
    let mut out = String::new();
    for (v, &b) in charges.bits().iter().enumerate() {
        writeln!(out, "{} {}", v + 1, b as u8).expect("writing to a String");
    }
    out
}

/// Charges for `n` vertices; unlisted vertices get 0.
pub fn parse_charges(text: &str, n: usize) -> Result<ChargeLabeling, ParseError> {
    let mut bits = vec![false; n];
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            [v, b] => {
                let v: usize = v.parse().or_else(|_| err(line, format!("bad vertex id `{v}`")))?;
                if v == 0 || v > n {
                    return err(line, format!("vertex {v} out of range 1..={n}"));
                }
                bits[v - 1] = match *b {
                    "0" => false,
                    "1" => true,
                    other => return err(line, format!("charge must be 0 or 1, found `{other}`")),
                };
            }
            _ => return err(line, "expected `<vertex> <bit>`"),
        }
    }
    Ok(ChargeLabeling::new(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::tests::arb_csp;
    use proptest::prelude::*;

    #[test]
    fn hypergraph_examples() {
        let h = parse_hypergraph("c path\np hg 3 2\n1 2\n2 3\n").unwrap();
        assert_eq!(h.edges(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(write_hypergraph(&h), "p hg 3 2\n1 2\n2 3\n");
        assert!(parse_hypergraph("p hg 3 2\n1 2\n").is_err());
        assert_eq!(parse_hypergraph("p hg 3 1\n1 4\n").unwrap_err().line, 2);
        assert!(parse_hypergraph("p hg 3 1\n2 1\n").is_err());
        assert!(parse_hypergraph("p hg 3 1\n2 2\n").is_err());
        assert!(parse_hypergraph("p hg three 1\n1\n").is_err());
        assert!(parse_hypergraph("p hg 3 1\n\n1 2\n").is_ok());
    }

    #[test]
    fn csp_examples() {
        let text = "c triangle\np csp 2 3 1\n2 1 2 2\n1 0\n0 1\n";
        let csp = parse_csp(text).unwrap();
        assert_eq!(csp.constraints()[0].allowed(), &[vec![0, 1], vec![1, 0]]);
        assert!(parse_csp("p csp 2 3 1\n2 1 3 1\n0 1\n").is_err());
        assert!(parse_csp("p csp 2 3 1\n2 1 2 1\n0 3\n").is_err());
        assert!(parse_csp("p csp 2 3 1\n2 1 2 2\n0 1\n").is_err());
        let constant = parse_csp("p csp 0 2 2\n0 1\n\n0 0\n").unwrap();
        assert_eq!(constant.constraints()[0].is_constant(), Some(true));
        assert_eq!(constant.constraints()[1].is_constant(), Some(false));
    }

    #[test]
    fn dimacs_with_provenance() {
        let cnf = Cnf::new(2, vec![vec![Lit::pos(0)], vec![Lit::neg(0), Lit::pos(1)], vec![]]);
        let text = write_dimacs(&cnf, Some(("vertex", &[0, 0, 2])));
        assert_eq!(text, "p cnf 2 3\nc vertex 1\n1 0\n-1 2 0\nc vertex 3\n0\n");
        assert_eq!(parse_dimacs(&text).unwrap(), cnf);
        assert!(parse_dimacs("p cnf 1 1\n2 0\n").is_err());
        assert!(parse_dimacs("p cnf 1 2\n1 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1\n2 0\n").is_ok());
    }

    #[test]
    fn dtree_examples() {
        let tree = DecisionTree::Query { var: 0, children: vec![DecisionTree::Leaf(0), DecisionTree::Leaf(1)] };
        let text = write_dtree(&tree, 2);
        assert_eq!(text, "p dt 2\nn 1\nl 1\nl 2\n");
        assert_eq!(parse_dtree(&text).unwrap(), (tree, 2));
        assert!(parse_dtree("p dt 2\nn 1\nl 1\n").is_err());
        assert!(parse_dtree("p dt 2\nl 1\nl 2\n").is_err());
        assert!(parse_dtree("p dt 2\nx 1\n").is_err());
    }

    #[test]
    fn resolution_examples() {
        let text = "1 a 1 0\n2 a -1 0\n3 r 1 2 1 0\n";
        let trace = parse_resolution(text).unwrap();
        assert_eq!(trace.steps[2].kind, StepKind::Resolve { left: 1, right: 2, pivot: 0 });
        assert_eq!(write_resolution(&trace), text);
        assert_eq!(parse_resolution("1 a 1\n").unwrap_err().line, 1);
        assert_eq!(parse_resolution("1 a 0\n2 q 0\n").unwrap_err().line, 2);
    }

    #[test]
    fn charge_examples() {
        let c = parse_charges("c odd\n2 1\n", 3).unwrap();
        assert_eq!(c.bits(), &[false, true, false]);
        assert_eq!(parse_charges(&write_charges(&c), 3).unwrap(), c);
        assert!(parse_charges("4 1\n", 3).is_err());
        assert!(parse_charges("1 2\n", 3).is_err());
    }

    fn arb_hypergraph() -> impl Strategy<Value = Hypergraph> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::btree_set(0..n, 1..=n.min(4)), 0..12)
                .prop_map(move |es| Hypergraph::new(n, es.into_iter().map(|e| e.into_iter().collect()).collect()).unwrap())
        })
    }

    fn arb_lit(vars: usize) -> impl Strategy<Value = Lit> {
        (0..vars, any::<bool>()).prop_map(|(v, neg)| if neg { Lit::neg(v) } else { Lit::pos(v) })
    }

    fn arb_cnf() -> impl Strategy<Value = Cnf> {
        (1usize..10).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(arb_lit(n), 0..5), 0..10).prop_map(move |cs| Cnf::new(n, cs))
        })
    }

    fn arb_tree(d: u32) -> impl Strategy<Value = DecisionTree> {
        let leaf = (0usize..50).prop_map(DecisionTree::Leaf);
        leaf.prop_recursive(5, 64, d, move |inner| {
            ((0usize..20), proptest::collection::vec(inner, d as usize))
                .prop_map(|(var, children)| DecisionTree::Query { var, children })
        })
    }

    fn arb_trace() -> impl Strategy<Value = ResolutionTrace> {
        proptest::collection::vec(
            (any::<bool>(), 1usize..30, 1usize..30, 0usize..10, proptest::collection::vec(arb_lit(10), 0..5)),
            0..10,
        )
        .prop_map(|raw| ResolutionTrace {
            steps: raw
                .into_iter()
                .enumerate()
                .map(|(i, (axiom, left, right, pivot, clause))| Step {
                    id: 2 * i + 1,
                    kind: if axiom { StepKind::Axiom } else { StepKind::Resolve { left, right, pivot } },
                    clause,
                })
                .collect(),
        })
    }

    proptest! {
        #[test]
        fn hypergraph_round_trip(h in arb_hypergraph()) {
            prop_assert_eq!(parse_hypergraph(&write_hypergraph(&h)).unwrap(), h);
        }

        #[test]
        fn csp_round_trip(csp in arb_csp(6, 4)) {
            prop_assert_eq!(parse_csp(&write_csp(&csp)).unwrap(), csp);
        }

        #[test]
        fn cnf_round_trip(cnf in arb_cnf()) {
            prop_assert_eq!(parse_dimacs(&write_dimacs(&cnf, None)).unwrap(), cnf.clone());
            let source: Vec<usize> = (0..cnf.clauses.len()).map(|i| i / 2).collect();
            prop_assert_eq!(parse_dimacs(&write_dimacs(&cnf, Some(("vertex", &source)))).unwrap(), cnf);
        }

        #[test]
        fn dtree_round_trip(d in 2u32..4, seed_tree in arb_tree(3)) {
            // Trim to arity d.
            fn trim(t: DecisionTree, d: usize) -> DecisionTree {
                match t {
                    DecisionTree::Leaf(i) => DecisionTree::Leaf(i),
                    DecisionTree::Query { var, children } => {
                        DecisionTree::Query { var, children: children.into_iter().take(d).map(|c| trim(c, d)).collect() }
                    }
                }
            }
            let tree = trim(seed_tree, d as usize);
            prop_assert_eq!(parse_dtree(&write_dtree(&tree, d)).unwrap(), (tree, d));
        }

        #[test]
        fn resolution_round_trip(trace in arb_trace()) {
            prop_assert_eq!(parse_resolution(&write_resolution(&trace)).unwrap(), trace);
        }

        #[test]
        fn charges_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..20)) {
            let c = ChargeLabeling::new(bits);
            prop_assert_eq!(parse_charges(&write_charges(&c), c.len()).unwrap(), c);
        }
    }
}
