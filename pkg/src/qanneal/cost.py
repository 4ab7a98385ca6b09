"""k-local cost functions with strict bounds, plus the graph-partitioning family.

A cost function over n bits is a constant offset plus a sum of local terms,
each term an explicit value table over a small subset of bits.  Strict lower
and upper bounds (c_min, c_max) are part of the object: every assignment must
evaluate strictly inside (c_min, c_max), which is what makes the normalized
cost land strictly inside (0, 1).

Bit conventions used throughout the package:

* qubit/bit ``i`` of an assignment is bit ``i`` of its integer index
  (qubit 0 = least significant bit);
* bitstrings render the index MSB-first, i.e. ``bitstring(idx, n)[-1 - i]``
  is bit ``i``;
* a term's value table is indexed by the joint sub-assignment
  ``sum(bit(qubits[j]) << j)`` (first listed qubit = LSB of the sub-index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# Margin construction for derived strict bounds: relative half-width with an
# absolute floor so degenerate (zero-span) costs still get an open interval.
MARGIN_REL = 0.5e-3
MARGIN_FLOOR = 1e-9

# Above this size the constructor refuses to brute-force-verify hand-supplied
# bounds that are not already guaranteed by interval arithmetic.
BRUTE_FORCE_VERIFY_CAP = 20


def index_of(x: int | str | Sequence[int], n: int) -> int:
    """Coerce an assignment (int index, MSB-first string, or bit sequence) to its index."""
    if isinstance(x, (int, np.integer)):
        idx = int(x)
        if not 0 <= idx < (1 << n):
            raise ValueError(f"index {idx} out of range for {n} bits")
        return idx
    if isinstance(x, str):
        if len(x) != n:
            raise ValueError(f"bitstring length {len(x)} != n = {n}")
        return int(x, 2)
    bits = list(x)
    if len(bits) != n:
        raise ValueError(f"bit sequence length {len(bits)} != n = {n}")
    return sum((1 << i) for i, b in enumerate(bits) if b)


def bitstring(index: int, n: int) -> str:
    """Render an assignment index as an MSB-first bitstring."""
    return format(index, f"0{n}b")


@dataclass(frozen=True)
class LocalTerm:
    """Cost contribution depending on k specific bits, as an explicit 2^k table."""

    qubits: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "values", values)
        k = len(qubits)
        if k < 1:
            raise ValueError("a local term must involve at least one bit")
        if any(nxt <= prev for prev, nxt in zip(qubits, qubits[1:])):
            raise ValueError(f"qubit indices must be strictly increasing, got {qubits}")
        if min(qubits) < 0:
            raise ValueError(f"negative qubit index in {qubits}")
        if len(values) != 1 << k:
            raise ValueError(f"value table for {k} bits needs {1 << k} entries, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("value table entries must be finite")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def value_at(self, index: int) -> float:
        """Table entry selected by the bits of a full assignment index."""
        sub = 0
        for j, q in enumerate(self.qubits):
            sub |= ((index >> q) & 1) << j
        return self.values[sub]


def canonical_terms(terms: Iterable[LocalTerm]) -> tuple[LocalTerm, ...]:
    """Fold terms acting on identical bit subsets into one and sort by (arity, qubits)."""
    folded: dict[tuple[int, ...], np.ndarray] = {}
    for term in terms:
        acc = folded.get(term.qubits)
        if acc is None:
            folded[term.qubits] = np.array(term.values, dtype=float)
        else:
            acc += np.array(term.values, dtype=float)
    return tuple(
        LocalTerm(qubits, tuple(values))
        for qubits, values in sorted(folded.items(), key=lambda kv: (len(kv[0]), kv[0]))
    )


@dataclass(frozen=True)
class CostFunction:
    """n-bit cost: constant + sum of local terms, with strict bounds c_min < C(x) < c_max."""

    n: int
    constant: float
    terms: tuple[LocalTerm, ...]
    c_min: float
    c_max: float

    def __post_init__(self):
        object.__setattr__(self, "terms", canonical_terms(self.terms))
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "c_min", float(self.c_min))
        object.__setattr__(self, "c_max", float(self.c_max))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.c_min < self.c_max:
            raise ValueError(f"need c_min < c_max, got ({self.c_min}, {self.c_max})")
        for term in self.terms:
            if term.arity > self.n:
                raise ValueError(f"term arity {term.arity} exceeds n = {self.n}")
            if term.qubits[-1] >= self.n:
                raise ValueError(f"term qubits {term.qubits} out of range for n = {self.n}")
        self._verify_strict_bounds()

    def _verify_strict_bounds(self):
        lo, hi = loose_range(self.constant, self.terms)
        if self.c_min < lo and hi < self.c_max:
            return  # interval-consistent: every assignment is inside (c_min, c_max)
        if self.n > BRUTE_FORCE_VERIFY_CAP:
            raise ValueError(
                "bounds are not interval-consistent and n > "
                f"{BRUTE_FORCE_VERIFY_CAP} forbids brute-force verification"
            )
        values = evaluate_all(self)
        if not (self.c_min < values.min() and values.max() < self.c_max):
            raise ValueError(
                f"bounds ({self.c_min}, {self.c_max}) are not strict: cost range is "
                f"[{values.min()}, {values.max()}]"
            )

    @property
    def max_arity(self) -> int:
        return max((t.arity for t in self.terms), default=0)

    @property
    def span(self) -> float:
        return self.c_max - self.c_min


def loose_range(constant: float, terms: Iterable[LocalTerm]) -> tuple[float, float]:
    """Interval-arithmetic cost range: constant plus per-term minima/maxima."""
    lo = hi = float(constant)
    for term in terms:
        lo += min(term.values)
        hi += max(term.values)
    return lo, hi


def derive_bounds(
    constant: float, terms: Iterable[LocalTerm], margin: float | None = None
) -> tuple[float, float]:
    """Strict bounds from interval arithmetic plus an additive margin.

    The margin defaults to ``max(MARGIN_FLOOR, MARGIN_REL * (loose_max - loose_min))``
    so that even an all-constant cost gets an open interval around it.
    """
    terms = tuple(terms)
    lo, hi = loose_range(constant, terms)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("cannot derive bounds from non-finite term values")
    if margin is None:
        margin = max(MARGIN_FLOOR, MARGIN_REL * (hi - lo))
    elif margin <= 0:
        raise ValueError("margin must be positive")
    return lo - margin, hi + margin


def evaluate(cost: CostFunction, x: int | str | Sequence[int]) -> float:
    """Cost of one assignment: constant + sum of term-table entries."""
    idx = index_of(x, cost.n)
    total = cost.constant
    for term in cost.terms:
        total += term.value_at(idx)
    return total


def evaluate_all(cost: CostFunction) -> np.ndarray:
    """Vector of all 2^n costs, indexed by assignment.

    Cached per cost object; treat the returned array as read-only.
    """
    return _evaluate_all_cached(cost)


@lru_cache(maxsize=64)
def _evaluate_all_cached(cost: CostFunction) -> np.ndarray:
    size = 1 << cost.n
    idx = np.arange(size, dtype=np.int64)
    total = np.full(size, cost.constant, dtype=float)
    for term in cost.terms:
        sub = np.zeros(size, dtype=np.int64)
        for j, q in enumerate(term.qubits):
            sub |= ((idx >> q) & 1) << j
        total += np.asarray(term.values, dtype=float)[sub]
    return total


def normalize(cost: CostFunction, x: int | str | Sequence[int]) -> float:
    """Affinely map the cost of ``x`` into the open unit interval."""
    c_nor = (evaluate(cost, x) - cost.c_min) / cost.span
    if not 0.0 < c_nor < 1.0:
        raise ValueError(f"normalized cost {c_nor} not strictly inside (0, 1); bounds are not strict")
    return c_nor


def normalized_all(cost: CostFunction) -> np.ndarray:
    """All 2^n normalized costs; strictly inside (0, 1) by the bound invariant."""
    return (evaluate_all(cost) - cost.c_min) / cost.span


@dataclass(frozen=True)
class GraphPartitionInstance:
    """Random-graph partitioning instance: split v vertices evenly, minimizing cut edges.

    ``lam`` is the soft balance penalty weight and ``p`` the edge probability the
    instance was generated with (p enters the cost only through its constant).
    """

    v: int
    edges: tuple[tuple[int, int], ...]
    j: float = 1.0
    lam: float = 0.0
    p: float = 0.5

    def __post_init__(self):
        if self.v < 2 or self.v % 2:
            raise ValueError(f"vertex count must be even and >= 2, got {self.v}")
        if self.j <= 0:
            raise ValueError("coupling strength j must be > 0")
        if self.lam < 0:
            raise ValueError("balance penalty lam must be >= 0")
        edges = tuple(sorted(tuple(sorted(map(int, e))) for e in self.edges))
        object.__setattr__(self, "edges", edges)
        seen = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop ({a}, {b})")
            if not (0 <= a < self.v and 0 <= b < self.v):
                raise ValueError(f"edge ({a}, {b}) out of range for v = {self.v}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))


def random_graph(v: int, p: float, seed: int) -> GraphPartitionInstance:
    """Each of the v(v-1)/2 vertex pairs becomes an edge independently with probability p."""
    if v < 2 or v % 2:
        raise ValueError(f"vertex count must be even and >= 2, got {v}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    edges = []
    for a in range(v):
        for b in range(a + 1, v):
            if rng.random() < p:
                edges.append((a, b))
    return GraphPartitionInstance(v=v, edges=tuple(edges), p=p)


def cut_size(inst: GraphPartitionInstance, x: int | str | Sequence[int]) -> int:
    """Number of edges joining the two sides of the assignment (independent oracle)."""
    idx = index_of(x, inst.v)
    return sum(1 for a, b in inst.edges if ((idx >> a) ^ (idx >> b)) & 1)


def graph_partition_cost(inst: GraphPartitionInstance) -> CostFunction:
    """2-local cost for a partitioning instance.

    Substituting s_i = 2 q_i - 1 into
    ``v(v-1)p/4 - (1/2J) sum_{i<j} J_ij s_i s_j + (lam/2) (sum_i s_i)^2``
    leaves a constant ``v(v-1)p/4 + lam*v/2`` plus one pair term per coupled
    pair: weight ``lam - 1/2`` on edges (the J's cancel) and ``lam`` on
    non-edges, multiplying s_i s_j.
    """
    edge_set = set(inst.edges)
    constant = inst.v * (inst.v - 1) * inst.p / 4.0 + inst.lam * inst.v / 2.0
    terms = []
    for a in range(inst.v):
        for b in range(a + 1, inst.v):
            w = inst.lam - 0.5 if (a, b) in edge_set else inst.lam
            if w != 0.0:
                # values indexed by (q_a, q_b) = 00, 10, 01, 11 -> s_a*s_b = +,-,-,+
                terms.append(LocalTerm((a, b), (w, -w, -w, w)))
    c_min, c_max = derive_bounds(constant, terms)
    return CostFunction(n=inst.v, constant=constant, terms=tuple(terms), c_min=c_min, c_max=c_max)


def random_local_cost(n: int, m: int, term_density: float = 1.0, seed: int = 0) -> CostFunction:
    """Reproducible random cost with term arities <= m.

    Draws ``max(1, round(term_density * n))`` terms; each picks an arity
    uniformly in 1..m, a uniform bit subset, and i.i.d. U(-1, 1) table values.
    Duplicate subsets fold together during canonicalization.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m = {m}, n = {n}")
    if term_density <= 0:
        raise ValueError("term_density must be positive")
    rng = np.random.default_rng(seed)
    num_terms = max(1, round(term_density * n))
    constant = float(rng.uniform(-1.0, 1.0))
    terms = []
    for _ in range(num_terms):
        k = int(rng.integers(1, m + 1))
        qubits = tuple(sorted(int(q) for q in rng.choice(n, size=k, replace=False)))
        values = tuple(float(v) for v in rng.uniform(-1.0, 1.0, size=1 << k))
        terms.append(LocalTerm(qubits, values))
    terms = canonical_terms(terms)
    c_min, c_max = derive_bounds(constant, terms)
    return CostFunction(n=n, constant=constant, terms=terms, c_min=c_min, c_max=c_max)


def constant_cost(n: int, value: float) -> CostFunction:
    """Degenerate cost: every assignment costs ``value`` (bounds via the margin floor)."""
    c_min, c_max = derive_bounds(value, ())
    return CostFunction(n=n, constant=value, terms=(), c_min=c_min, c_max=c_max)


# --- JSON instance format ------------------------------------------------
# Field order is fixed for byte-reproducible files.

def cost_to_dict(cost: CostFunction) -> dict:
    return {
        "n": cost.n,
        "constant": cost.constant,
        "terms": [
            {"qubits": list(t.qubits), "values": list(t.values)} for t in cost.terms
        ],
        "c_min": cost.c_min,
        "c_max": cost.c_max,
    }


def cost_from_dict(data: dict) -> CostFunction:
    return CostFunction(
        n=int(data["n"]),
        constant=float(data["constant"]),
        terms=tuple(
            LocalTerm(tuple(t["qubits"]), tuple(t["values"])) for t in data["terms"]
        ),
        c_min=float(data["c_min"]),
        c_max=float(data["c_max"]),
    )


def graph_to_dict(inst: GraphPartitionInstance) -> dict:
    return {
        "v": inst.v,
        "edges": [list(e) for e in inst.edges],
        "j": inst.j,
        "lambda": inst.lam,
        "p": inst.p,
    }


def graph_from_dict(data: dict) -> GraphPartitionInstance:
    return GraphPartitionInstance(
        v=int(data["v"]),
        edges=tuple(tuple(e) for e in data["edges"]),
        j=float(data.get("j", 1.0)),
        lam=float(data.get("lambda", 0.0)),
        p=float(data.get("p", 0.5)),
    )
