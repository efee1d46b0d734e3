"""Compile an ILP into a QUBO and convert between QUBO and Ising forms.

Every integer variable (ILP variable or slack) is written in binary with
most-significant bit first: ``v = z . q`` with ``z = [2**(R-1), ..., 2, 1]``.
Circuit-row slacks carry ``a`` extra fractional bits ``[1/2, ..., 2**-a]``
because their residuals are multiples of ``2**-a``.

With ``x = Z_x q_x`` and ``s = Z_s q_s`` the energy

    E(q) = q^T Q q + C = c^T x + p * ||A x + b + s||^2

is an exact identity over all bit vectors ``q = (q_x, q_s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .ilp import IlpInstance

_SYM_TOL = 1e-12


def n_bits(v_max: int) -> int:
    """Bits needed to represent every integer in ``0..v_max``."""
    return max(int(v_max), 0).bit_length()


def int_weights(v_max: int) -> np.ndarray:
    r = n_bits(v_max)
    return 2.0 ** np.arange(r - 1, -1, -1)


def frac_weights(a: int) -> np.ndarray:
    return 2.0 ** -np.arange(1, a + 1)


def _block_diag(weights: list[np.ndarray]) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    col = 0
    for i, w in enumerate(weights):
        rows.extend([i] * len(w))
        cols.extend(range(col, col + len(w)))
        vals.extend(w)
        col += len(w)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(weights), col))


@dataclass
class BitEncoding:
    """Binary expansion of the ILP variables ``x`` and slacks ``s``.

    ``x_weights[i]`` and ``s_weights[k]`` hold the bit weights of variable
    ``i`` and slack row ``k``; equality rows get an empty list.
    """

    x_weights: list[np.ndarray]
    s_weights: list[np.ndarray]
    Z_x: sparse.csr_matrix = field(init=False, repr=False)
    Z_s: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        self.Z_x = _block_diag(self.x_weights)
        self.Z_s = _block_diag(self.s_weights)

    @property
    def n_x(self) -> int:
        return self.Z_x.shape[1]

    @property
    def n_s(self) -> int:
        return self.Z_s.shape[1]

    @property
    def n_bits(self) -> int:
        return self.n_x + self.n_s

    def split(self, q):
        q = np.asarray(q)
        return q[..., : self.n_x], q[..., self.n_x :]

    def decode_x(self, q) -> np.ndarray:
        q_x, _ = self.split(q)
        return np.asarray(self.Z_x @ q_x.T).T

    def decode_s(self, q) -> np.ndarray:
        _, q_s = self.split(q)
        return np.asarray(self.Z_s @ q_s.T).T

    def encode(self, x, s) -> np.ndarray:
        """Bit vector for integer/dyadic values ``x`` and ``s``.

        Raises ``ValueError`` if a value is not representable by its bits.
        """
        bits = []
        for values, weights in ((x, self.x_weights), (s, self.s_weights)):
            values = np.asarray(values, dtype=float)
            if len(values) != len(weights):
                raise ValueError(f"expected {len(weights)} values, got {len(values)}")
            for v, w in zip(values, weights):
                rest = float(v)
                for wi in w:
                    bit = 1 if rest >= wi else 0
                    rest -= bit * wi
                    bits.append(bit)
                if rest != 0.0:
                    raise ValueError(f"value {v} is not representable with weights {list(w)}")
        return np.array(bits, dtype=np.uint8)


def build_encoding(inst: IlpInstance) -> BitEncoding:
    cfg = inst.cfg
    x_w = [int_weights(1)] * inst.n_patterns + [int_weights(cfg.omega_max)] * inst.n_circuits
    circuit_slack = np.concatenate([int_weights(cfg.omega_max), frac_weights(cfg.a)])
    s_w = (
        [np.empty(0)] * inst.n_demands
        + [circuit_slack] * inst.n_circuits
        + [int_weights(int(e)) for e in inst.eta]
    )
    return BitEncoding(x_w, s_w)


@dataclass
class QuboProblem:
    """Symmetric QUBO ``E(q) = q^T Q q + offset``.

    ``encoding`` and ``instance`` are set when the QUBO was compiled from an
    ILP; problems read back from a file carry only the matrix.
    """

    Q: sparse.csr_matrix
    offset: float = 0.0
    penalty: float = 1.0
    encoding: BitEncoding | None = None
    instance: IlpInstance | None = field(default=None, repr=False)

    def __post_init__(self):
        self.Q = sparse.csr_matrix(self.Q, dtype=float)
        if self.Q.shape[0] != self.Q.shape[1]:
            raise ValueError(f"Q must be square, got {self.Q.shape}")
        if not is_symmetric(self.Q):
            raise ValueError("Q must be symmetric; use QuboProblem.from_matrix to symmetrize")

    @classmethod
    def from_matrix(cls, M, offset: float = 0.0, penalty: float = 1.0) -> QuboProblem:
        """Wrap any square matrix (e.g. triangular) as an equivalent symmetric QUBO."""
        M = sparse.csr_matrix(M, dtype=float)
        return cls((M + M.T) / 2.0, offset, penalty)

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    @property
    def Q_triang(self) -> sparse.csr_matrix:
        return triangular_reduce(self.Q)

    @property
    def n_couplings(self) -> int:
        """Non-zero off-diagonal entries of the triangular form."""
        return int(sparse.triu(self.Q, k=1).count_nonzero())

    @property
    def nnz(self) -> int:
        """Non-zero entries of the triangular form, diagonal included."""
        return int(sparse.triu(self.Q).count_nonzero())

    def dense(self) -> np.ndarray:
        return self.Q.toarray()

    def energy(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(q @ (self.Q @ q)) + self.offset

    def energies(self, bits) -> np.ndarray:
        """Energies of a batch of bit vectors (one per row)."""
        B = np.atleast_2d(np.asarray(bits, dtype=float))
        QB = np.asarray(self.Q @ B.T)
        return np.einsum("ij,ji->i", B, QB) + self.offset


def is_symmetric(Q, tol: float = _SYM_TOL) -> bool:
    if sparse.issparse(Q):
        diff = abs(Q - Q.T)
        return diff.nnz == 0 or diff.max() <= tol * max(1.0, abs(Q).max())
    Q = np.asarray(Q)
    return Q.shape[0] == Q.shape[1] and np.allclose(Q, Q.T, rtol=0.0, atol=tol * max(1.0, np.abs(Q).max(initial=0.0)))


def compile_qubo(A, b, c, Z_x, Z_s, p: float) -> tuple[sparse.csr_matrix, float]:
    """QUBO matrix and offset of ``c^T x + p ||A x + b + s||^2`` with ``x = Z_x q_x``, ``s = Z_s q_s``.

    Blocks, before the overall factor ``p``::

        Q_xx = Z_x^T A^T A Z_x + diag((2 b^T A + c^T / p) Z_x)
        Q_xs = Q_sx^T = Z_x^T A^T Z_s
        Q_ss = Z_s^T Z_s + 2 diag(Z_s^T b)

    and ``C = p ||b||^2``.
    """
    if p < 1:
        raise ValueError(f"penalty must be >= 1, got {p}")
    A = sparse.csr_matrix(A, dtype=float)
    Z_x = sparse.csr_matrix(Z_x, dtype=float)
    Z_s = sparse.csr_matrix(Z_s, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    AZ = (A @ Z_x).tocsr()

    # c^T Z_x is added after scaling by p so that it stays exact.
    Q_xx = p * ((AZ.T @ AZ) + sparse.diags(2.0 * (AZ.T @ b))) + sparse.diags(Z_x.T @ c)
    Q_xs = p * (AZ.T @ Z_s)
    Q_ss = p * ((Z_s.T @ Z_s) + sparse.diags(2.0 * (Z_s.T @ b)))
    Q = sparse.bmat([[Q_xx, Q_xs], [Q_xs.T, Q_ss]], format="csr")
    Q.eliminate_zeros()
    return Q, float(p * (b @ b))


def build_qubo(inst: IlpInstance, enc: BitEncoding | None = None, p: float | None = None) -> QuboProblem:
    """Compile ``inst`` with penalty ``p`` (default: the instance config's penalty)."""
    if enc is None:
        enc = build_encoding(inst)
    if p is None:
        p = inst.cfg.penalty
    Q, offset = compile_qubo(inst.A, inst.b, inst.c, enc.Z_x, enc.Z_s, p)
    return QuboProblem(Q, offset=offset, penalty=float(p), encoding=enc, instance=inst)


def triangular_reduce(Q):
    """Fold the strictly lower triangle onto the upper one: ``tril(Q, -1)^T + triu(Q)``."""
    if sparse.issparse(Q):
        return (sparse.tril(Q, k=-1).T + sparse.triu(Q)).tocsr()
    Q = np.asarray(Q)
    return np.tril(Q, -1).T + np.triu(Q)


@dataclass
class IsingProblem:
    """``E(sigma) = sigma^T J sigma + h^T sigma + g`` over spins in {-1, +1}."""

    J: sparse.csr_matrix
    h: np.ndarray
    g: float

    def energy(self, sigma) -> float:
        s = np.asarray(sigma, dtype=float)
        return float(s @ (self.J @ s) + self.h @ s + self.g)

    def energies(self, spins) -> np.ndarray:
        S = np.atleast_2d(np.asarray(spins, dtype=float))
        JS = np.asarray(self.J @ S.T)
        return np.einsum("ij,ji->i", S, JS) + S @ self.h + self.g


def to_ising(qp) -> IsingProblem:
    """Spin form of a symmetric QUBO matrix under ``sigma = 2 q - 1``.

    ``J = Q_TL / 4``, ``h = q_T / 2 + Q_TL 1 / 2``,
    ``g = 1^T Q_TL 1 / 4 + 1^T q_T / 2``, where ``q_T`` is the diagonal of Q
    and ``Q_TL`` its off-diagonal part. The QUBO offset is not included.
    """
    Q = qp.Q if isinstance(qp, QuboProblem) else sparse.csr_matrix(qp, dtype=float)
    if not is_symmetric(Q):
        raise ValueError("to_ising needs a symmetric Q; symmetrize with (Q + Q^T) / 2 first")
    q_t = Q.diagonal()
    Q_tl = (Q - sparse.diags(q_t)).tocsr()
    Q_tl.eliminate_zeros()
    row_sums = np.asarray(Q_tl.sum(axis=1)).ravel()
    J = Q_tl / 4.0
    h = q_t / 2.0 + row_sums / 2.0
    g = float(row_sums.sum() / 4.0 + q_t.sum() / 2.0)
    return IsingProblem(sparse.csr_matrix(J), h, g)


def export_qubo(qp: QuboProblem, path: str | Path) -> None:
    """Write ``QUBO N nnz offset penalty`` followed by ``i j value`` lines (i <= j, 0-based)."""
    T = qp.Q_triang.tocoo()
    keep = T.data != 0
    rows, cols, vals = T.row[keep], T.col[keep], T.data[keep]
    order = np.lexsort((cols, rows))
    lines = [f"QUBO {qp.N} {len(vals)} {qp.offset!r} {qp.penalty!r}"]
    lines += [f"{rows[i]} {cols[i]} {float(vals[i])!r}" for i in order]
    Path(path).write_text("\n".join(lines) + "\n")


def read_qubo_header(path: str | Path) -> dict:
    with open(path) as fh:
        parts = fh.readline().split()
    if len(parts) != 5 or parts[0] != "QUBO":
        raise ValueError(f"{path}: missing 'QUBO N nnz offset penalty' header")
    return {"N": int(parts[1]), "nnz": int(parts[2]), "offset": float(parts[3]), "penalty": float(parts[4])}


def import_qubo(path: str | Path) -> QuboProblem:
    head = read_qubo_header(path)
    n = head["N"]
    rows, cols, vals = [], [], []
    with open(path) as fh:
        fh.readline()
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                i, j, v = line.split()
                i, j, v = int(i), int(j), float(v)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'i j value'") from None
            if not (0 <= i <= j < n):
                raise ValueError(f"{path}:{lineno}: index ({i}, {j}) outside upper triangle of size {n}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
    if len(vals) != head["nnz"]:
        raise ValueError(f"{path}: header announces {head['nnz']} entries, found {len(vals)}")
    T = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return QuboProblem.from_matrix(T, head["offset"], head["penalty"])
