"""Smoke test for the hypersep_py extension.

Build and run from the repo root:

    cargo build -p hypersep-py --release --features extension-module
    cp target/release/libhypersep_py.so crates/python/python/hypersep_py.so
    python3 crates/python/python/smoke_test.py
"""

import hypersep_py as hs

path = hs.Hypergraph(7, [[i, i + 1] for i in range(6)])
sep = path.find_separator(method="auto", seed=1)
assert path.is_balanced_separator(sep.edges), sep
assert len(sep) <= sep.theory_bound or sep.fallback
size, witness = path.min_balanced_separator()
assert size == 1 and path.is_balanced_separator(witness)

assert abs(hs.epsilon_r(2) - (1 - 2 ** -0.5) ** 2) < 1e-12

colouring = hs.Csp(
    4, 3,
    [([a, b], [[x, y] for x in range(3) for y in range(3) if x != y])
     for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]],
)
assert colouring.count() == 18
assert colouring.count(recursive=True) == 18
sat, witness = colouring.decide()
assert sat and witness is not None
assert colouring.max()[0] == 4

k4 = hs.Hypergraph(4, [[a, b] for a in range(4) for b in range(a + 1, 4)])
ref = hs.refute_tseitin(k4)
assert hs.check_resolution(ref.cnf, ref.resolution) is None
assert hs.check_dtree(ref.cnf, ref.dtree) is None
assert ref.proof_size <= 2 * ref.leaves - 1

contradiction = hs.Csp(2, 2, [([0, 1], [[0, 0]]), ([0, 1], [[1, 1]])])
ref2 = hs.refute_csp2(contradiction)
assert hs.check_resolution(ref2.cnf, ref2.resolution) is None

h = hs.random_uniform_hypergraph(10, 3, 2, 7)
assert h.num_vertices == 10
csv = hs.tightness_experiment([8], [3], [2], 2, seed=5, jobs=1)
assert csv.splitlines()[0].startswith("n,") and len(csv.splitlines()) == 3

try:
    hs.Hypergraph(2, [[0, 5]])
    raise AssertionError("out-of-range vertex accepted")
except ValueError:
    pass

print("smoke test OK")
