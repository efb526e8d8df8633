//! Python bindings. Indices are 0-based, as in the Rust API; the text
//! format helpers read and write the 1-based file formats.

use pyo3::exceptions::PyValueError;
use pyo3::PyErr;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn strategy(method: &str, max_trials: usize) -> Result<hypersep::separator::SeparatorStrategy, PyErr> {
    use hypersep::separator::SeparatorStrategy;
    match method {
        "random" => Ok(SeparatorStrategy::Random { max_trials }),
        "exhaustive" => Ok(SeparatorStrategy::Exhaustive),
        "auto" => Ok(SeparatorStrategy::Auto { max_trials }),
        other => Err(value_err(format!("unknown method `{other}` (expected random, exhaustive or auto)"))),
    }
}

#[pyo3::pymodule]
mod hypersep_py {
    use hypersep::csp::{self, Mode, SolveAnswer, SolveOptions, Value};
    use hypersep::{experiments, formats, refutation, separator, tseitin};
    use num_bigint::BigUint;
    use pyo3::prelude::*;

    use super::{strategy, value_err};

    #[pyclass(frozen)]
    struct Hypergraph {
        inner: hypersep::hypergraph::Hypergraph,
    }

    #[pymethods]
    impl Hypergraph {
        #[new]
        fn new(n: usize, edges: Vec<Vec<usize>>) -> PyResult<Self> {
            let inner = hypersep::hypergraph::Hypergraph::new(n, edges).map_err(value_err)?;
            Ok(Hypergraph { inner })
        }

        /// Parses the `.hg` text format.
        #[staticmethod]
        fn from_text(text: &str) -> PyResult<Self> {
            Ok(Hypergraph { inner: formats::parse_hypergraph(text).map_err(value_err)? })
        }

        fn to_text(&self) -> String {
            formats::write_hypergraph(&self.inner)
        }

        #[getter]
        fn num_vertices(&self) -> usize {
            self.inner.num_vertices()
        }

        #[getter]
        fn num_edges(&self) -> usize {
            self.inner.num_edges()
        }

        #[getter]
        fn edges(&self) -> Vec<Vec<usize>> {
            self.inner.edges().to_vec()
        }

        fn max_degree(&self) -> usize {
            self.inner.max_degree()
        }

        /// `(vertices, edges)` per component, sorted by smallest vertex.
        fn connected_components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
            self.inner.connected_components().components.into_iter().map(|c| (c.vertices, c.edges)).collect()
        }

        fn is_balanced_separator(&self, edges: Vec<usize>) -> PyResult<bool> {
            Ok(separator::is_balanced_separator(&self.inner, &edges).map_err(value_err)?.balanced)
        }

        #[pyo3(signature = (method = "auto", seed = 0, max_trials = separator::DEFAULT_MAX_TRIALS))]
        fn find_separator(&self, method: &str, seed: u64, max_trials: usize) -> PyResult<Separator> {
            let res = separator::find_separator(&self.inner, strategy(method, max_trials)?, seed).map_err(value_err)?;
            Ok(Separator {
                edges: res.edges.clone(),
                component_edge_counts: res.component_edge_counts.clone(),
                method: res.method.to_string(),
                fallback: res.fallback,
                trials_used: res.trials_used,
                theory_bound: separator::theory_bound(&self.inner).map_err(value_err)?,
            })
        }

        /// Exact minimum size and the lexicographically first minimum
        /// separator (at most 18 edges).
        fn min_balanced_separator(&self) -> PyResult<(usize, Vec<usize>)> {
            let best = experiments::min_balanced_separator(&self.inner).map_err(value_err)?;
            Ok((best.size, best.witness))
        }

        fn __repr__(&self) -> String {
            format!("Hypergraph(n={}, m={})", self.inner.num_vertices(), self.inner.num_edges())
        }
    }

    #[pyclass(frozen, get_all)]
    struct Separator {
        edges: Vec<usize>,
        component_edge_counts: Vec<usize>,
        method: String,
        fallback: bool,
        trials_used: usize,
        theory_bound: f64,
    }

    #[pymethods]
    impl Separator {
        fn __len__(&self) -> usize {
            self.edges.len()
        }

        fn __repr__(&self) -> String {
            format!("Separator(edges={:?}, method={:?}, fallback={})", self.edges, self.method, self.fallback)
        }
    }

    #[pyclass(frozen)]
    struct Csp {
        inner: csp::Csp,
    }

    impl Csp {
        fn run(&self, mode: Mode, recursive: bool, seed: u64, method: &str) -> PyResult<SolveAnswer> {
            let opts = SolveOptions { recursive, separator: strategy(method, separator::DEFAULT_MAX_TRIALS)?, seed, ..Default::default() };
            Ok(csp::solve(&self.inner, mode, &opts).map_err(value_err)?.answer)
        }
    }

    #[pymethods]
    impl Csp {
        /// `constraints` is a list of `(scope, allowed_tuples)`.
        #[new]
        fn new(num_vars: usize, domain: u32, constraints: Vec<(Vec<usize>, Vec<Vec<Value>>)>) -> PyResult<Self> {
            let cs = constraints
                .into_iter()
                .map(|(scope, allowed)| csp::Constraint::new(scope, allowed, domain))
                .collect::<Result<Vec<_>, _>>()
                .map_err(value_err)?;
            Ok(Csp { inner: csp::Csp::new(num_vars, domain, cs).map_err(value_err)? })
        }

        /// Parses the `.csp` text format.
        #[staticmethod]
        fn from_text(text: &str) -> PyResult<Self> {
            Ok(Csp { inner: formats::parse_csp(text).map_err(value_err)? })
        }

        fn to_text(&self) -> String {
            formats::write_csp(&self.inner)
        }

        /// DIMACS encoding with one clause per forbidden tuple (boolean only).
        fn to_cnf(&self) -> PyResult<String> {
            let enc = csp::cnf_encode(&self.inner).map_err(value_err)?;
            Ok(formats::write_dimacs(&enc.cnf, Some(("constraint", &enc.clause_constraint))))
        }

        #[getter]
        fn num_vars(&self) -> usize {
            self.inner.num_vars()
        }

        #[getter]
        fn domain(&self) -> u32 {
            self.inner.domain()
        }

        /// `(satisfiable, witness or None)`.
        #[pyo3(signature = (recursive = false, seed = 0, method = "auto"))]
        fn decide(&self, recursive: bool, seed: u64, method: &str) -> PyResult<(bool, Option<Vec<Value>>)> {
            match self.run(Mode::Decide, recursive, seed, method)? {
                SolveAnswer::Decide { satisfiable, witness } => Ok((satisfiable, witness)),
                _ => unreachable!("decide mode"),
            }
        }

        #[pyo3(signature = (recursive = false, seed = 0, method = "auto"))]
        fn count(&self, recursive: bool, seed: u64, method: &str) -> PyResult<BigUint> {
            match self.run(Mode::Count, recursive, seed, method)? {
                SolveAnswer::Count(c) => Ok(c),
                _ => unreachable!("count mode"),
            }
        }

        /// `(most satisfied constraints, assignment achieving it)`.
        #[pyo3(signature = (recursive = false, seed = 0, method = "auto"))]
        fn max(&self, recursive: bool, seed: u64, method: &str) -> PyResult<(usize, Vec<Value>)> {
            match self.run(Mode::Max, recursive, seed, method)? {
                SolveAnswer::Max { satisfied, witness } => Ok((satisfied, witness.unwrap_or_default())),
                _ => unreachable!("max mode"),
            }
        }

        fn __repr__(&self) -> String {
            format!("Csp(vars={}, d={}, constraints={})", self.inner.num_vars(), self.inner.domain(), self.inner.constraints().len())
        }
    }

    /// A refutation in the text formats plus its statistics.
    #[pyclass(frozen, get_all)]
    struct Refutation {
        cnf: String,
        dtree: String,
        resolution: String,
        leaves: usize,
        depth: usize,
        proof_size: usize,
        proof_width: usize,
        separators_used: Vec<(usize, usize)>,
    }

    impl Refutation {
        fn from_core(r: refutation::Refutation, provenance: (&str, &[usize])) -> Self {
            Refutation {
                cnf: formats::write_dimacs(&r.cnf, Some(provenance)),
                dtree: formats::write_dtree(&r.tree, 2),
                resolution: formats::write_resolution(&r.trace),
                leaves: r.stats.leaves,
                depth: r.stats.depth,
                proof_size: r.stats.proof_size,
                proof_width: r.stats.proof_width,
                separators_used: r.stats.separators_used,
            }
        }
    }

    /// Tseitin refutation of a simple graph; `charges` defaults to a single
    /// 1 on vertex 0.
    #[pyfunction]
    #[pyo3(signature = (graph, charges = None, base_threshold = None))]
    fn refute_tseitin(graph: PyRef<'_, Hypergraph>, charges: Option<Vec<bool>>, base_threshold: Option<f64>) -> PyResult<Refutation> {
        let g = &graph.inner;
        let charges = match charges {
            Some(bits) => tseitin::ChargeLabeling::new(bits),
            None => tseitin::ChargeLabeling::odd(g.num_vertices()).map_err(value_err)?,
        };
        let r = refutation::refute_tseitin(g, &charges, &refutation::TseitinOptions { base_threshold }).map_err(value_err)?;
        let enc = tseitin::TseitinInstance::new(g.clone(), charges).map_err(value_err)?.to_cnf();
        Ok(Refutation::from_core(r, ("vertex", &enc.clause_constraint)))
    }

    #[pyfunction]
    #[pyo3(signature = (csp, seed = 0, method = "auto"))]
    fn refute_csp2(csp: PyRef<'_, Csp>, seed: u64, method: &str) -> PyResult<Refutation> {
        let opts = refutation::Csp2Options {
            separator: strategy(method, separator::DEFAULT_MAX_TRIALS)?,
            seed,
            ..Default::default()
        };
        let r = refutation::refute_csp2(&csp.inner, &opts).map_err(value_err)?;
        let enc = csp::cnf_encode(&csp.inner).map_err(value_err)?;
        Ok(Refutation::from_core(r, ("constraint", &enc.clause_constraint)))
    }

    /// `None` when the trace refutes the CNF, else the first violation.
    #[pyfunction]
    fn check_resolution(cnf: &str, trace: &str) -> PyResult<Option<String>> {
        let cnf = formats::parse_dimacs(cnf).map_err(value_err)?;
        let trace = formats::parse_resolution(trace).map_err(value_err)?;
        Ok(refutation::check_resolution(&cnf, &trace).err().map(|v| v.to_string()))
    }

    /// `None` when the tree is a valid decision tree for the CNF.
    #[pyfunction]
    fn check_dtree(cnf: &str, tree: &str) -> PyResult<Option<String>> {
        let cnf = formats::parse_dimacs(cnf).map_err(value_err)?;
        let (tree, _) = formats::parse_dtree(tree).map_err(value_err)?;
        Ok(refutation::check_dtree(refutation::TreeSource::Cnf(&cnf), &tree).err().map(|v| v.to_string()))
    }

    #[pyfunction]
    fn epsilon_r(r: usize) -> PyResult<f64> {
        separator::epsilon_r(r).map_err(value_err)
    }

    #[pyfunction]
    fn random_uniform_hypergraph(n: usize, k: usize, r: usize, seed: u64) -> PyResult<Hypergraph> {
        let inner = experiments::random_uniform_hypergraph(&experiments::GeneratorParams { n, k, r, seed }).map_err(value_err)?;
        Ok(Hypergraph { inner })
    }

    /// CSV report of minimum separators over the sweep.
    #[pyfunction]
    #[pyo3(signature = (ns, ks, rs, instances, seed = 0, jobs = 0))]
    fn tightness_experiment(
        py: Python<'_>,
        ns: Vec<usize>,
        ks: Vec<usize>,
        rs: Vec<usize>,
        instances: usize,
        seed: u64,
        jobs: usize,
    ) -> PyResult<String> {
        let sweep = experiments::Sweep { ns, ks, rs, instances, seed };
        let report = py.detach(|| experiments::tightness_experiment(&sweep, jobs)).map_err(value_err)?;
        Ok(report.to_csv())
    }
}

#[cfg(test)]
mod tests {
    use pyo3::prelude::*;

    fn run(code: &str) {
        Python::initialize();
        Python::attach(|py| {
            let module = pyo3::wrap_pymodule!(super::hypersep_py)(py);
            let globals = pyo3::types::PyDict::new(py);
            globals.set_item("hs", module).unwrap();
            let code = std::ffi::CString::new(code).unwrap();
            if let Err(e) = py.run(&code, Some(&globals), None) {
                e.print(py);
                panic!("python snippet failed");
            }
        });
    }

    #[test]
    fn separator_and_counting_from_python() {
        run(r#"
p5 = hs.Hypergraph(5, [[0, 1], [1, 2], [2, 3], [3, 4]])
sep = p5.find_separator(method="exhaustive")
assert sep.edges == [1] and p5.is_balanced_separator(sep.edges)
assert p5.min_balanced_separator() == (1, [1])
tri = hs.Csp(3, 3, [([a, b], [[x, y] for x in range(3) for y in range(3) if x != y]) for a, b in [(0, 1), (1, 2), (0, 2)]])
assert tri.count() == 6 and tri.count(recursive=True) == 6
assert hs.Csp.from_text(tri.to_text()).count() == 6
"#);
    }

    #[test]
    fn refutation_from_python() {
        run(r#"
g = hs.Hypergraph(3, [[0, 1], [1, 2], [0, 2]])
r = hs.refute_tseitin(g)
assert hs.check_resolution(r.cnf, r.resolution) is None
assert hs.check_dtree(r.cnf, r.dtree) is None
assert r.proof_size <= 2 * r.leaves - 1
bad = "\n".join(r.resolution.splitlines()[:-1]) + "\n"
assert hs.check_resolution(r.cnf, bad) is not None
try:
    hs.refute_tseitin(g, [False, False, False])
    raise AssertionError("even charge accepted")
except ValueError:
    pass
"#);
    }
}
