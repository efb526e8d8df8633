//! Clausal formulas over 0-based boolean variables.

use std::fmt;

/// A literal on a 0-based variable. Displays in DIMACS form (`var + 1`,
/// negative when negated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    var: usize,
    negated: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Lit { var, negated: true }
    }

    /// Literal that is false when `var` takes `value`.
    pub fn falsified_by(var: usize, value: bool) -> Self {
        Lit { var, negated: value }
    }

    pub fn var(self) -> usize {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    pub fn negate(self) -> Self {
        Lit { var: self.var, negated: !self.negated }
    }

    /// Value the literal takes under `var = value`.
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    /// `None` for 0.
    pub fn from_dimacs(x: i64) -> Option<Self> {
        match x {
            0 => None,
            x if x > 0 => Some(Lit::pos(x as usize - 1)),
            x => Some(Lit::neg((-x) as usize - 1)),
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = Vec<Lit>;

/// Sorts and deduplicates a clause so clauses compare as sets.
pub fn normalize(clause: &[Lit]) -> Clause {
    let mut c = clause.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

pub fn is_tautology(clause: &[Lit]) -> bool {
    let c = normalize(clause);
    c.windows(2).any(|w| w[0].var == w[1].var)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Self {
        Cnf { num_vars, clauses }
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(assignment[l.var])))
    }

    /// First satisfying assignment in lexicographic order (variable 0 most
    /// significant), by enumeration. Intended for small test instances.
    pub fn brute_force_model(&self) -> Option<Vec<bool>> {
        assert!(self.num_vars < 32, "brute force limited to 31 variables");
        let n = self.num_vars;
        (0u64..1 << n)
            .map(|code| (0..n).map(|i| code >> (n - 1 - i) & 1 == 1).collect::<Vec<bool>>())
            .find(|a| self.is_satisfied_by(a))
    }

    pub fn max_clause_len(&self) -> usize {
        self.clauses.iter().map(Vec::len).max().unwrap_or(0)
    }
}
