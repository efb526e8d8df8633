//! Tseitin parity formulas over hypergraphs.
//!
//! Each edge `e` is a boolean variable `x_e`, and each vertex `v` demands
//! that the XOR of its incident edge variables equals its charge. With an
//! odd total charge and every edge of even size the formula is
//! unsatisfiable.

use thiserror::Error;

use crate::csp::{cnf_encode, Constraint, Csp, EncodedCnf, Value};
use crate::hypergraph::Hypergraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TseitinError {
    #[error("charge labeling has {found} entries but the hypergraph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("edge index {edge} out of range (m = {m})")]
    EdgeOutOfRange { edge: usize, m: usize },
    #[error("an odd charge needs at least one vertex")]
    NoVertices,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChargeLabeling {
    bits: Vec<bool>,
    parity: bool,
}

impl ChargeLabeling {
    pub fn new(bits: Vec<bool>) -> Self {
        let parity = bits.iter().fold(false, |acc, &b| acc ^ b);
        ChargeLabeling { bits, parity }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    /// Charge 1 on vertex 0, 0 elsewhere.
    pub fn odd(n: usize) -> Result<Self, TseitinError> {
        if n == 0 {
            return Err(TseitinError::NoVertices);
        }
        let mut bits = vec![false; n];
        bits[0] = true;
        Ok(Self::new(bits))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// XOR of all charges.
    pub fn is_odd_charge(&self) -> bool {
        self.parity
    }

    /// Charges after fixing `x_e = b`: every vertex of `e` flips when `b` is
    /// set. Total parity is preserved for even-size edges.
    pub fn update_charge(&self, h: &Hypergraph, e: usize, b: bool) -> Result<Self, TseitinError> {
        if e >= h.num_edges() {
            return Err(TseitinError::EdgeOutOfRange { edge: e, m: h.num_edges() });
        }
        let mut next = self.clone();
        if b {
            for &v in h.edge(e) {
                next.bits[v] ^= true;
                next.parity ^= true;
            }
        }
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TseitinInstance {
    hypergraph: Hypergraph,
    charges: ChargeLabeling,
}

impl TseitinInstance {
    pub fn new(hypergraph: Hypergraph, charges: ChargeLabeling) -> Result<Self, TseitinError> {
        if charges.len() != hypergraph.num_vertices() {
            return Err(TseitinError::LengthMismatch { expected: hypergraph.num_vertices(), found: charges.len() });
        }
        Ok(TseitinInstance { hypergraph, charges })
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraph
    }

    pub fn charges(&self) -> &ChargeLabeling {
        &self.charges
    }

    /// One boolean variable per edge, one parity constraint per vertex over
    /// its incident edges in increasing index order.
    pub fn to_csp(&self) -> Csp {
        let constraints = self
            .hypergraph
            .incidence()
            .into_iter()
            .enumerate()
            .map(|(v, scope)| {
                let charge = self.charges.get(v) as Value;
                Constraint::from_predicate(scope, 2, |t| t.iter().fold(0, |acc, &x| acc ^ x) == charge)
                    .expect("parity tables over bounded degree fit")
            })
            .collect();
        Csp::new(self.hypergraph.num_edges(), 2, constraints).expect("incidence lists reference valid edges")
    }

    /// CNF with, per vertex, the clauses excluding each wrong-parity
    /// assignment of its edges (lexicographic order). A degree-0 vertex with
    /// charge 1 yields the empty clause. `clause_constraint` of the result
    /// maps each clause to its vertex.
    pub fn to_cnf(&self) -> EncodedCnf {
        cnf_encode(&self.to_csp()).expect("Tseitin CSPs are boolean")
    }
}

pub fn is_odd_charge(charges: &ChargeLabeling) -> bool {
    charges.is_odd_charge()
}

pub fn tseitin_csp(instance: &TseitinInstance) -> Csp {
    instance.to_csp()
}

pub fn tseitin_cnf(instance: &TseitinInstance) -> EncodedCnf {
    instance.to_cnf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Lit;
    use crate::csp::{brute_force, Mode, SolveAnswer};
    use proptest::prelude::*;

    fn triangle() -> Hypergraph {
        Hypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    fn charges(bits: &[u8]) -> ChargeLabeling {
        ChargeLabeling::new(bits.iter().map(|&b| b == 1).collect())
    }

    fn solutions(csp: &Csp) -> u64 {
        match brute_force(csp, Mode::Count, 1 << 24).unwrap() {
            SolveAnswer::Count(c) => c.try_into().unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn odd_charge_examples() {
        assert!(!ChargeLabeling::zeros(4).is_odd_charge());
        assert!(charges(&[1]).is_odd_charge());
        assert!(charges(&[1, 0, 0]).is_odd_charge());
        assert!(!charges(&[1, 1, 0]).is_odd_charge());
        assert!(ChargeLabeling::odd(0).is_err());
    }

    #[test]
    fn triangle_csp() {
        let odd = TseitinInstance::new(triangle(), charges(&[1, 0, 0])).unwrap();
        let csp = odd.to_csp();
        assert_eq!(csp.num_vars(), 3);
        assert_eq!(csp.constraints().len(), 3);
        assert_eq!(solutions(&csp), 0);
        let even = TseitinInstance::new(triangle(), charges(&[1, 1, 0])).unwrap();
        assert_eq!(solutions(&even.to_csp()), 2);
    }

    #[test]
    fn isolated_charged_vertex_is_false() {
        let h = Hypergraph::new(3, vec![vec![0, 1]]).unwrap();
        let t = TseitinInstance::new(h, charges(&[0, 0, 1])).unwrap();
        assert_eq!(t.to_csp().constraints()[2].is_constant(), Some(false));
        let cnf = t.to_cnf();
        assert!(cnf.cnf.clauses.iter().any(|c| c.is_empty()));
    }

    #[test]
    fn degree_two_vertex_clauses() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let t = TseitinInstance::new(h.clone(), charges(&[1, 0, 1])).unwrap();
        let enc = t.to_cnf();
        assert_eq!(&enc.cnf.clauses[..2], &[vec![Lit::pos(0), Lit::pos(1)], vec![Lit::neg(0), Lit::neg(1)]]);
        assert_eq!(&enc.clause_constraint[..2], &[0, 0]);
        let t = TseitinInstance::new(h, charges(&[0, 1, 0])).unwrap();
        let enc = t.to_cnf();
        assert_eq!(&enc.cnf.clauses[..2], &[vec![Lit::pos(0), Lit::neg(1)], vec![Lit::neg(0), Lit::pos(1)]]);
    }

    #[test]
    fn triangle_cnf() {
        let t = TseitinInstance::new(triangle(), charges(&[1, 0, 0])).unwrap();
        let enc = t.to_cnf();
        assert_eq!(enc.cnf.clauses.len(), 6);
        assert!(enc.cnf.brute_force_model().is_none());
    }

    #[test]
    fn single_edge_odd() {
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let t = TseitinInstance::new(h, ChargeLabeling::odd(2).unwrap()).unwrap();
        let enc = t.to_cnf();
        assert_eq!(enc.cnf.clauses, vec![vec![Lit::pos(0)], vec![Lit::neg(0)]]);
    }

    #[test]
    fn update_charge_examples() {
        let t = triangle();
        let l = charges(&[1, 0, 0]);
        assert_eq!(l.update_charge(&t, 0, false).unwrap(), l);
        assert_eq!(l.update_charge(&t, 0, true).unwrap(), charges(&[0, 1, 0]));
        assert!(l.update_charge(&t, 3, true).is_err());
        assert!(TseitinInstance::new(t, charges(&[1])).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = Hypergraph> {
        (2usize..8).prop_flat_map(|n| {
            proptest::collection::btree_set((0..n, 0..n), 0..12).prop_map(move |pairs| {
                let edges: std::collections::BTreeSet<(usize, usize)> =
                    pairs.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
                Hypergraph::new(n, edges.into_iter().map(|(a, b)| vec![a, b]).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn parity_preserved_and_involutive(h in arb_graph(), bits in proptest::collection::vec(any::<bool>(), 8), flips in proptest::collection::vec((any::<usize>(), any::<bool>()), 0..10)) {
            let mut l = ChargeLabeling::new(bits[..h.num_vertices()].to_vec());
            let parity = l.is_odd_charge();
            for (e, b) in flips {
                if h.num_edges() == 0 { break; }
                let e = e % h.num_edges();
                let next = l.update_charge(&h, e, b).unwrap();
                prop_assert_eq!(next.is_odd_charge(), parity);
                prop_assert_eq!(&next.update_charge(&h, e, b).unwrap(), &l);
                l = next;
            }
        }

        #[test]
        fn odd_charge_unsat_and_cnf_agrees(h in arb_graph(), bits in proptest::collection::vec(any::<bool>(), 8)) {
            let l = ChargeLabeling::new(bits[..h.num_vertices()].to_vec());
            let t = TseitinInstance::new(h.clone(), l.clone()).unwrap();
            let csp = t.to_csp();
            let enc = t.to_cnf();
            let m = h.num_edges();
            let mut models = 0u64;
            for code in 0u32..1 << m {
                let a: Vec<Value> = (0..m).map(|i| code >> i & 1).collect();
                let b: Vec<bool> = a.iter().map(|&x| x == 1).collect();
                prop_assert_eq!(csp.satisfies(&a), enc.cnf.is_satisfied_by(&b));
                models += csp.satisfies(&a) as u64;
            }
            if l.is_odd_charge() {
                prop_assert_eq!(models, 0);
            }
        }

        #[test]
        fn even_charge_count_on_connected_graphs(h in arb_graph(), bits in proptest::collection::vec(any::<bool>(), 8)) {
            let dec = h.connected_components();
            let connected = dec.components.len() == 1 && dec.isolated_vertices.is_empty();
            let l = ChargeLabeling::new(bits[..h.num_vertices()].to_vec());
            if connected && !l.is_odd_charge() {
                let t = TseitinInstance::new(h.clone(), l).unwrap();
                let expected = 1u64 << (h.num_edges() + 1 - h.num_vertices());
                prop_assert_eq!(solutions(&t.to_csp()), expected);
            }
        }
    }
}
