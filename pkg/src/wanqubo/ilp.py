"""Resource-allocation ILP in block-matrix form.

Variables ``x = (g, omega)``: one binary path selector per pattern and one
integer circuit counter per circuit path. Constraints ``A x + b + s = 0``
with row blocks

* demand rows   ``G g - 1 = 0``            (exactly one pattern per demand)
* circuit rows  ``H g - omega + s_c = 0``  (enough circuits for the routed load)
* node rows     ``phi omega - eta + s_v = 0`` (transceiver budget per node)

and cost ``c^T x = sum(omega)``. Loads are multiples of ``2**-a``; every
feasibility decision is made on integer numerators scaled by ``2**a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .pathgen import PathCatalog
from .traffic import CIRCUIT_RATE_GBPS, DemandSet, discretize

DEFAULT_PENALTY = 4.0
DEFAULT_ORACLE_BUDGET = 10**7

# (max |V|, eta_max, omega_max) by network size.
SIZE_DEFAULTS: tuple[tuple[int, int, int], ...] = (
    (4, 15, 3),
    (7, 31, 3),
    (11, 63, 3),
    (12, 63, 7),
    (16, 127, 7),
)


class InfeasibleError(RuntimeError):
    pass


class OracleBudgetError(RuntimeError):
    pass


def size_defaults(n_nodes: int) -> tuple[int, int]:
    """``(eta_max, omega_max)`` for a network with ``n_nodes`` nodes."""
    for limit, eta_max, omega_max in SIZE_DEFAULTS:
        if n_nodes <= limit:
            return eta_max, omega_max
    return SIZE_DEFAULTS[-1][1:]


@dataclass(frozen=True)
class IlpConfig:
    xi: float = CIRCUIT_RATE_GBPS
    a: int = 1
    eta_max: int = 15
    omega_max: int = 3
    penalty: float = DEFAULT_PENALTY

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if self.a < 0:
            raise ValueError("a must be non-negative")
        if self.eta_max < 1 or self.omega_max < 1:
            raise ValueError("eta_max and omega_max must be positive")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")

    @classmethod
    def for_network(cls, n_nodes: int, **overrides) -> IlpConfig:
        eta_max, omega_max = size_defaults(n_nodes)
        params = {"eta_max": eta_max, "omega_max": omega_max}
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)


@dataclass(frozen=True)
class NetworkSolution:
    g: np.ndarray
    omega: np.ndarray

    @property
    def cost(self) -> int:
        return int(np.sum(self.omega))

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.g, self.omega])


@dataclass(frozen=True)
class Violation:
    block: str
    row: int
    residual: Fraction

    def __str__(self) -> str:
        return f"{self.block}[{self.row}] residual {self.residual}"


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


@dataclass
class IlpInstance:
    catalog: PathCatalog
    demands: DemandSet
    cfg: IlpConfig
    h_bar: list[Fraction]
    h_num: np.ndarray
    eta: np.ndarray
    A: sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    H_num: sparse.csr_matrix = field(repr=False)

    @property
    def scale(self) -> int:
        return 2 ** self.cfg.a

    @property
    def n_demands(self) -> int:
        return self.catalog.n_demands

    @property
    def n_patterns(self) -> int:
        return self.catalog.n_patterns

    @property
    def n_circuits(self) -> int:
        return self.catalog.n_circuits

    @property
    def n_nodes(self) -> int:
        return self.catalog.n_nodes

    @property
    def K(self) -> int:
        return self.n_demands + self.n_circuits + self.n_nodes

    @property
    def M(self) -> int:
        return self.n_patterns + self.n_circuits

    # Row and column blocks.
    @property
    def demand_rows(self) -> slice:
        return slice(0, self.n_demands)

    @property
    def circuit_rows(self) -> slice:
        return slice(self.n_demands, self.n_demands + self.n_circuits)

    @property
    def node_rows(self) -> slice:
        return slice(self.n_demands + self.n_circuits, self.K)

    @property
    def g_cols(self) -> slice:
        return slice(0, self.n_patterns)

    @property
    def omega_cols(self) -> slice:
        return slice(self.n_patterns, self.M)

    @property
    def G(self) -> sparse.csr_matrix:
        return self.A[self.demand_rows, self.g_cols]

    @property
    def H(self) -> sparse.csr_matrix:
        return self.A[self.circuit_rows, self.g_cols]

    @property
    def phi(self) -> sparse.csr_matrix:
        return self.catalog.phi

    @property
    def x_upper(self) -> np.ndarray:
        return np.concatenate([
            np.ones(self.n_patterns, dtype=np.int64),
            np.full(self.n_circuits, self.cfg.omega_max, dtype=np.int64),
        ])

    @property
    def slack_upper(self) -> np.ndarray:
        """Largest value each slack can take when x is within bounds."""
        return np.concatenate([
            np.zeros(self.n_demands),
            np.full(self.n_circuits, float(self.cfg.omega_max)),
            self.eta.astype(float),
        ])

    def row_label(self, k: int) -> tuple[str, int]:
        """Map a row of A to ``(block, index within block)``."""
        for name, sl in (("demand", self.demand_rows), ("circuit", self.circuit_rows), ("node", self.node_rows)):
            if sl.start <= k < sl.stop:
                return name, k - sl.start
        raise IndexError(k)

    def col_label(self, m: int) -> tuple[str, int]:
        if 0 <= m < self.n_patterns:
            return "g", m
        if self.n_patterns <= m < self.M:
            return "omega", m - self.n_patterns
        raise IndexError(m)

    def cost(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def residual(self, x: np.ndarray, s: np.ndarray | None = None) -> np.ndarray:
        r = self.A @ x + self.b
        return r if s is None else r + s


def assemble(
    catalog: PathCatalog,
    demands: DemandSet,
    cfg: IlpConfig,
    eta: Sequence[int] | None = None,
) -> IlpInstance:
    """Build ``A``, ``b`` and ``c`` for the catalog's patterns and circuit paths.

    ``eta`` defaults to ``cfg.eta_max`` transceivers at every node.
    """
    if catalog.n_demands != len(demands):
        raise ValueError(f"catalog has {catalog.n_demands} demands, demand set has {len(demands)}")
    n_d, n_t, n_c, n_v = catalog.n_demands, catalog.n_patterns, catalog.n_circuits, catalog.n_nodes

    h_bar = [discretize(d.volume_gbps, cfg.xi, cfg.a) for d in demands]
    scale = 2 ** cfg.a
    h_num = np.array([int(h * scale) for h in h_bar], dtype=np.int64)
    eta_vec = np.full(n_v, cfg.eta_max, dtype=np.int64) if eta is None else np.asarray(eta, dtype=np.int64)
    if eta_vec.shape != (n_v,):
        raise ValueError(f"eta must have one entry per node ({n_v})")

    G = sparse.csr_matrix(
        (np.ones(n_t), (catalog.pattern_demand, np.arange(n_t))), shape=(n_d, n_t)
    )
    H_num = (catalog.rho @ sparse.diags(h_num[catalog.pattern_demand])).tocsr()
    H = H_num.astype(float) / scale
    phi = catalog.phi.astype(float)

    A = sparse.bmat(
        [
            [G, None],
            [H, -sparse.identity(n_c)],
            [None, phi],
        ],
        format="csr",
        dtype=float,
    )
    # bmat drops empty blocks; force the full shape for degenerate catalogs.
    A.resize((n_d + n_c + n_v, n_t + n_c))
    b = -np.concatenate([np.ones(n_d), np.zeros(n_c), eta_vec.astype(float)])
    c = np.concatenate([np.zeros(n_t), np.ones(n_c)])
    return IlpInstance(catalog, demands, cfg, h_bar, h_num, eta_vec, A, b, c, H_num.astype(np.int64))


def circuit_loads(inst: IlpInstance, g: np.ndarray) -> np.ndarray:
    """Routed load per circuit path as integer numerators over ``2**a``."""
    return np.asarray(inst.H_num @ np.asarray(g, dtype=np.int64)).ravel()


def check_feasible(inst: IlpInstance, sol: NetworkSolution) -> Feasibility:
    g = np.asarray(sol.g, dtype=np.int64)
    omega = np.asarray(sol.omega, dtype=np.int64)
    if g.shape != (inst.n_patterns,) or omega.shape != (inst.n_circuits,):
        raise ValueError(
            f"solution shape (g={g.shape}, omega={omega.shape}) does not match "
            f"|T|={inst.n_patterns}, |C|={inst.n_circuits}"
        )
    scale = inst.scale
    violations = []

    per_demand = np.bincount(inst.catalog.pattern_demand, weights=g, minlength=inst.n_demands).astype(np.int64)
    for d in np.flatnonzero(per_demand != 1):
        violations.append(Violation("demand", int(d), Fraction(int(per_demand[d]) - 1)))

    over = circuit_loads(inst, g) - scale * omega
    for cc in np.flatnonzero(over > 0):
        violations.append(Violation("circuit", int(cc), Fraction(int(over[cc]), scale)))

    used = np.asarray(inst.catalog.phi @ omega).ravel() - inst.eta
    for v in np.flatnonzero(used > 0):
        violations.append(Violation("node", int(v), Fraction(int(used[v]))))

    return Feasibility(not violations, tuple(violations))


def min_circuits(inst: IlpInstance, g: np.ndarray) -> np.ndarray:
    """Smallest circuit counts that carry the load routed by ``g``."""
    load = circuit_loads(inst, g)
    return -(-load // inst.scale)


def oracle_solve(inst: IlpInstance, budget: int = DEFAULT_ORACLE_BUDGET, chunk: int = 1 << 15) -> NetworkSolution:
    """Exact optimum by enumerating one pattern per demand.

    For a fixed selection the cheapest feasible circuit counts are the
    ceilings of the routed loads, so only selections need enumerating.
    Ties go to the first selection in lexicographic order (demand 0 most
    significant).
    """
    sizes = [sl.stop - sl.start for sl in inst.catalog.demand_slices]
    if any(s == 0 for s in sizes):
        raise InfeasibleError("a demand has no candidate pattern")
    total = math.prod(sizes)
    if total > budget:
        raise OracleBudgetError(f"{total} pattern selections exceed the budget of {budget}")

    n_c = inst.n_circuits
    rho = inst.catalog.rho.toarray()
    contrib = [
        (rho[:, sl] * inst.h_num[d]).T for d, sl in enumerate(inst.catalog.demand_slices)
    ]
    phi_t = inst.catalog.phi.toarray().T
    scale = inst.scale
    omega_max = inst.cfg.omega_max

    # place values of the mixed-radix selection index; demand 0 is most significant
    place = np.ones(len(sizes), dtype=np.int64)
    for d in range(len(sizes) - 2, -1, -1):
        place[d] = place[d + 1] * sizes[d + 1]

    best_cost, best_idx = None, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        load = np.zeros((len(idx), n_c), dtype=np.int64)
        for d, size in enumerate(sizes):
            load += contrib[d][(idx // place[d]) % size]
        omega = -(-load // scale)
        ok = np.all(omega <= omega_max, axis=1) & np.all(omega @ phi_t <= inst.eta, axis=1)
        if not ok.any():
            continue
        cost = omega.sum(axis=1)
        cost = np.where(ok, cost, np.iinfo(np.int64).max)
        j = int(np.argmin(cost))
        if best_cost is None or cost[j] < best_cost:
            best_cost, best_idx = int(cost[j]), int(idx[j])

    if best_idx is None:
        raise InfeasibleError("no pattern selection satisfies the circuit and transceiver limits")
    g = np.zeros(inst.n_patterns, dtype=np.int64)
    for d, sl in enumerate(inst.catalog.demand_slices):
        g[sl.start + (best_idx // place[d]) % sizes[d]] = 1
    return NetworkSolution(g, min_circuits(inst, g))


def _fmt(v: float) -> str:
    return repr(float(v))


def export_ilp(inst: IlpInstance, path: str | Path) -> None:
    """Write the ILP in a plain coordinate text format.

    ::

        K M
        A <nnz>
        <row> <col> <value>     (nnz lines, 0-based)
        b
        <value>                 (K lines)
        c
        <value>                 (M lines)
        x_bounds
        <lo> <hi>               (M lines)
        s_bounds
        <lo> <hi>               (K lines)
    """
    A = inst.A.tocoo()
    order = np.lexsort((A.col, A.row))
    lines = [f"{inst.K} {inst.M}", f"A {A.nnz}"]
    lines += [f"{A.row[i]} {A.col[i]} {_fmt(A.data[i])}" for i in order]
    lines.append("b")
    lines += [_fmt(v) for v in inst.b]
    lines.append("c")
    lines += [_fmt(v) for v in inst.c]
    lines.append("x_bounds")
    lines += [f"0 {hi}" for hi in inst.x_upper]
    lines.append("s_bounds")
    lines += [f"0.0 {_fmt(hi)}" for hi in inst.slack_upper]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class IlpMatrices:
    """Raw contents of an exported ILP file."""

    A: sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    x_bounds: np.ndarray
    s_bounds: np.ndarray


def load_ilp(path: str | Path) -> IlpMatrices:
    lines = Path(path).read_text().split("\n")
    it = iter(lines)
    try:
        K, M = (int(v) for v in next(it).split())
        tag, nnz = next(it).split()
        if tag != "A":
            raise ValueError(f"expected 'A' block, got {tag!r}")
        rows, cols, vals = [], [], []
        for _ in range(int(nnz)):
            r, c_, v = next(it).split()
            rows.append(int(r))
            cols.append(int(c_))
            vals.append(float(v))

        def block(name, n, parse):
            head = next(it).strip()
            if head != name:
                raise ValueError(f"expected {name!r} block, got {head!r}")
            return [parse(next(it)) for _ in range(n)]

        b = block("b", K, float)
        c = block("c", M, float)
        xb = block("x_bounds", M, lambda s: [float(t) for t in s.split()])
        sb = block("s_bounds", K, lambda s: [float(t) for t in s.split()])
    except (StopIteration, ValueError) as exc:
        raise ValueError(f"{path}: malformed ILP file ({exc})") from exc
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(K, M))
    return IlpMatrices(A, np.array(b), np.array(c), np.array(xb), np.array(sb))
