"""Sparse LP/MILP problem containers and the LP-format writer.

A problem is stored row-wise in CSR form:  minimize  obj @ x  subject to
rows with relations in {<=, =, >=} and elementwise variable bounds.  A
MilpProblem adds a set of variable indices restricted to {0, 1}.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

REL_LE = 0
REL_EQ = 1
REL_GE = 2

_REL_TEXT = {REL_LE: "<=", REL_EQ: "=", REL_GE: ">="}
_REL_FROM_TEXT = {"<=": REL_LE, "=": REL_EQ, "==": REL_EQ, ">=": REL_GE}


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    NUMERICAL = "Numerical"

    def __str__(self):
        return self.value


class ProblemError(ValueError):
    """Structural problem defect (bad index, inverted bounds, shape mismatch)."""


class SolveTimeout(ProblemError):
    """Solve hit its wall-clock budget without finding any incumbent."""


@dataclass
class LpProblem:
    """min obj @ x  s.t.  CSR rows (rel, rhs),  lo <= x <= hi."""

    n_vars: int
    obj: np.ndarray
    indptr: np.ndarray      # (n_rows+1,)
    indices: np.ndarray     # column indices
    data: np.ndarray        # coefficients
    rel: np.ndarray         # (n_rows,) int8 codes REL_*
    rhs: np.ndarray         # (n_rows,)
    lo: np.ndarray          # (n_vars,) may be -inf
    hi: np.ndarray          # (n_vars,) may be +inf

    @property
    def n_rows(self) -> int:
        return self.rel.size

    def validate(self):
        n = self.n_vars
        if self.obj.shape != (n,) or self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ProblemError("objective/bounds shape mismatch")
        m = self.rel.size
        if self.rhs.shape != (m,) or self.indptr.shape != (m + 1,):
            raise ProblemError("row metadata shape mismatch")
        if self.indices.size != self.data.size or self.indptr[-1] != self.indices.size:
            raise ProblemError("CSR structure inconsistent")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ProblemError("column index out of range")
        if np.any(self.lo > self.hi + 1e-12):
            j = int(np.argmax(self.lo - self.hi))
            raise ProblemError(f"variable {j}: lower bound exceeds upper bound")
        if not np.all(np.isfinite(self.rhs)):
            raise ProblemError("rhs must be finite")
        if not np.all(np.isfinite(self.data)):
            raise ProblemError("coefficients must be finite")
        bad = ~np.isin(self.rel, (REL_LE, REL_EQ, REL_GE))
        if bad.any():
            raise ProblemError("unknown row relation code")

    def with_bounds(self, lo: np.ndarray, hi: np.ndarray) -> "LpProblem":
        """Same rows and objective, new bound vectors (arrays are shared
        except for the bounds)."""
        return replace(self, lo=lo, hi=hi)

    def row(self, i: int):
        """(columns, coefficients) of row i."""
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.data[a:b]

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Signed constraint violation per row: positive means violated."""
        ax = self.dot(x)
        out = np.zeros(self.n_rows)
        le = self.rel == REL_LE
        ge = self.rel == REL_GE
        eq = self.rel == REL_EQ
        out[le] = ax[le] - self.rhs[le]
        out[ge] = self.rhs[ge] - ax[ge]
        out[eq] = np.abs(ax[eq] - self.rhs[eq])
        return out

    def dot(self, x: np.ndarray) -> np.ndarray:
        """Row activities A @ x."""
        from scipy import sparse
        A = sparse.csr_matrix((self.data, self.indices, self.indptr),
                              shape=(self.n_rows, self.n_vars))
        return A @ x

    def max_violation(self, x: np.ndarray) -> float:
        bound_viol = float(max(np.max(self.lo - x, initial=0.0),
                               np.max(x - self.hi, initial=0.0)))
        if self.n_rows == 0:
            return bound_viol
        return max(bound_viol, float(self.residuals(x).max(initial=0.0)))

    @classmethod
    def from_rows(cls, obj, rows, lo=None, hi=None, n_vars=None) -> "LpProblem":
        """Convenience constructor for small hand-written problems.

        rows: iterable of (coeffs, relation, rhs) where coeffs is either a
        dict {var: coef} or a sequence of (var, coef) pairs, and relation is
        one of "<=", "=", ">=".
        """
        obj = np.asarray(obj, dtype=float)
        n = int(n_vars) if n_vars is not None else obj.size
        indptr = [0]
        cols: list = []
        vals: list = []
        rel = []
        rhs = []
        for coeffs, r, b in rows:
            items = coeffs.items() if isinstance(coeffs, dict) else coeffs
            for j, a in items:
                cols.append(j)
                vals.append(a)
            indptr.append(len(cols))
            if r not in _REL_FROM_TEXT:
                raise ProblemError(f"unknown relation {r!r}")
            rel.append(_REL_FROM_TEXT[r])
            rhs.append(b)
        lo_arr = np.full(n, -np.inf) if lo is None else np.asarray(lo, dtype=float)
        hi_arr = np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float)
        p = cls(n_vars=n, obj=obj,
                indptr=np.asarray(indptr, dtype=np.int64),
                indices=np.asarray(cols, dtype=np.int64),
                data=np.asarray(vals, dtype=float),
                rel=np.asarray(rel, dtype=np.int8),
                rhs=np.asarray(rhs, dtype=float),
                lo=lo_arr, hi=hi_arr)
        p.validate()
        return p


class LpBuilder:
    """Incremental builder that keeps COO triplets until finalized.

    Supports scalar add_row for small models and vectorized add_block for
    bulk constraint families.
    """

    def __init__(self):
        self._lo: list = []
        self._hi: list = []
        self._obj: list = []
        self._chunks_row: list = []
        self._chunks_col: list = []
        self._chunks_val: list = []
        self._rel: list = []
        self._rhs: list = []
        self.n_rows = 0

    @property
    def n_vars(self) -> int:
        return len(self._lo)

    def add_vars(self, count: int, lo=0.0, hi=np.inf, obj=0.0) -> int:
        """Append count variables; lo/hi/obj may be scalars or arrays.
        Returns the index of the first new variable."""
        first = self.n_vars
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (count,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (count,))
        obj = np.broadcast_to(np.asarray(obj, dtype=float), (count,))
        self._lo.extend(lo.tolist())
        self._hi.extend(hi.tolist())
        self._obj.extend(obj.tolist())
        return first

    def set_bounds(self, idx, lo=None, hi=None):
        for j in np.atleast_1d(np.asarray(idx, dtype=np.int64)):
            if lo is not None:
                self._lo[j] = float(lo)
            if hi is not None:
                self._hi[j] = float(hi)

    def tighten_upper(self, j: int, hi: float):
        self._hi[j] = min(self._hi[j], float(hi))

    def tighten_lower(self, j: int, lo: float):
        self._lo[j] = max(self._lo[j], float(lo))

    def add_row(self, coeffs, rel: str, rhs: float):
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        cols = []
        vals = []
        for j, a in items:
            cols.append(j)
            vals.append(a)
        self._chunks_row.append(np.full(len(cols), self.n_rows, dtype=np.int64))
        self._chunks_col.append(np.asarray(cols, dtype=np.int64))
        self._chunks_val.append(np.asarray(vals, dtype=float))
        self._rel.append(np.asarray([_REL_FROM_TEXT[rel]], dtype=np.int8))
        self._rhs.append(np.asarray([rhs], dtype=float))
        self.n_rows += 1

    def add_block(self, row_local: np.ndarray, col: np.ndarray, val: np.ndarray,
                  rel: str, rhs: np.ndarray, n_new: int | None = None):
        """Append a block of rows at once.  row_local indexes 0..n_new-1
        and has the same length as col/val; n_new defaults to len(rhs)."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if n_new is None:
            n_new = rhs.size
        self._chunks_row.append(np.asarray(row_local, dtype=np.int64) + self.n_rows)
        self._chunks_col.append(np.asarray(col, dtype=np.int64))
        self._chunks_val.append(np.asarray(val, dtype=float))
        self._rel.append(np.full(n_new, _REL_FROM_TEXT[rel], dtype=np.int8))
        self._rhs.append(rhs)
        self.n_rows += n_new

    def build(self) -> LpProblem:
        from scipy import sparse
        n = self.n_vars
        if self._chunks_row:
            rows = np.concatenate(self._chunks_row)
            cols = np.concatenate(self._chunks_col)
            vals = np.concatenate(self._chunks_val)
        else:
            rows = np.zeros(0, dtype=np.int64)
            cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        m = self.n_rows
        A = sparse.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        p = LpProblem(
            n_vars=n,
            obj=np.asarray(self._obj, dtype=float),
            indptr=A.indptr.astype(np.int64),
            indices=A.indices.astype(np.int64),
            data=A.data.astype(float),
            rel=np.concatenate(self._rel) if self._rel else np.zeros(0, dtype=np.int8),
            rhs=np.concatenate(self._rhs) if self._rhs else np.zeros(0),
            lo=np.asarray(self._lo, dtype=float),
            hi=np.asarray(self._hi, dtype=float),
        )
        p.validate()
        return p


@dataclass
class MilpProblem:
    """An LpProblem plus the set of variables restricted to {0, 1}."""

    lp: LpProblem
    binaries: np.ndarray

    def __post_init__(self):
        b = np.unique(np.asarray(self.binaries, dtype=np.int64))
        object.__setattr__(self, "binaries", b)

    def validate(self):
        self.lp.validate()
        if self.binaries.size:
            if self.binaries.min() < 0 or self.binaries.max() >= self.lp.n_vars:
                raise ProblemError("binary index out of range")

    @property
    def n_vars(self) -> int:
        return self.lp.n_vars

    @property
    def n_rows(self) -> int:
        return self.lp.n_rows


def relax(p: MilpProblem) -> LpProblem:
    """Continuous relaxation: binary bounds intersected with [0, 1];
    a problem with no binaries comes back with identical bounds."""
    lo = p.lp.lo.copy()
    hi = p.lp.hi.copy()
    if p.binaries.size:
        b = p.binaries
        lo[b] = np.maximum(lo[b], 0.0)
        hi[b] = np.minimum(hi[b], 1.0)
    return p.lp.with_bounds(lo, hi)


@dataclass
class LpSolution:
    status: SolveStatus
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None = None
    iterations: int = 0
    method: str = ""


@dataclass
class MilpSolution:
    status: SolveStatus
    x: np.ndarray | None
    objective: float
    gap: float
    nodes: int
    wall_time: float
    incumbent_trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# LP-format writer

def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _fmt_term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    lead = "" if first and sign == "" else f"{sign} "
    return f"{lead}{_fmt(mag)} {name}"


def write_lp(problem, path) -> None:
    """Write a problem in LP format (Minimize / Subject To / Bounds /
    Binaries / End).  Variables are named x<j>, rows c<i>.  Accepts either
    an LpProblem or a MilpProblem."""
    if isinstance(problem, MilpProblem):
        lp = problem.lp
        binaries = problem.binaries
    else:
        lp = problem
        binaries = np.zeros(0, dtype=np.int64)
    lines = ["Minimize", " obj:"]
    terms = []
    nz = np.nonzero(lp.obj)[0]
    for k, j in enumerate(nz):
        terms.append(_fmt_term(lp.obj[j], f"x{j}", k == 0))
    if not terms:
        terms = ["0 x0"] if lp.n_vars else ["0"]
    # wrap objective terms a few per line to keep lines readable
    for i in range(0, len(terms), 8):
        lines.append("   " + " ".join(terms[i:i + 8]))
    lines.append("Subject To")
    for i in range(lp.n_rows):
        cols, vals = lp.row(i)
        terms = []
        for k, (j, a) in enumerate(zip(cols, vals)):
            terms.append(_fmt_term(a, f"x{j}", k == 0))
        if not terms:
            terms = ["0 x0"]
        rel = _REL_TEXT[int(lp.rel[i])]
        lines.append(f" c{i}: " + " ".join(terms) + f" {rel} {_fmt(lp.rhs[i])}")
    lines.append("Bounds")
    for j in range(lp.n_vars):
        lo, hi = lp.lo[j], lp.hi[j]
        if lo == -np.inf and hi == np.inf:
            lines.append(f" x{j} free")
        elif lo == hi:
            lines.append(f" x{j} = {_fmt(lo)}")
        else:
            left = f"{_fmt(lo)} <= " if lo != -np.inf else "-inf <= "
            right = f" <= {_fmt(hi)}" if hi != np.inf else ""
            lines.append(f" {left}x{j}{right}")
    if binaries.size:
        lines.append("Binaries")
        for i in range(0, binaries.size, 12):
            lines.append(" " + " ".join(f"x{j}" for j in binaries[i:i + 12]))
    lines.append("End")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
