"""A small algebraic modelling layer over scipy's HiGHS interface.

Model code talks to :class:`Model` only: variables and constraints are added
in named blocks (numpy-shaped families), so a model with tens of thousands of
rows is assembled without per-coefficient Python loops.  Integrality is limited
to binaries.

Backends are chosen with the ``CAPROBUST_SOLVER`` environment variable or the
``backend`` field of :class:`SolveOptions`:

``highs-ds``   HiGHS dual simplex via :func:`scipy.optimize.linprog` (default)
``highs``      HiGHS with its own LP algorithm choice
``highs-ipm``  HiGHS interior point with crossover

Binary programs always go through :func:`scipy.optimize.milp` whatever the
backend.

LP interchange format
---------------------
:func:`write_lp` emits a subset of the CPLEX LP text format::

    \\ comment lines
    Minimize                      (or Maximize)
     obj: + 2 x(0) - 1.5 y(1,0) + 3
    Subject To
     cap(0): + 1 x(0) + 1 y(0,0) <= 10
    Bounds
     0 <= x(0) <= 10
     y(0,0) free
     -inf <= y(1,0) <= 4
    Binaries
     z(0)
    End

Each term is ``sign coefficient name`` on its own token triple, coefficients
are printed with 17 significant digits so a write/read cycle reproduces every
number exactly, and a bare trailing number in the objective is a constant.
Variable and constraint names are ``block(i,j,...)`` with the block's
multi-index.  :func:`read_lp` parses exactly this subset.
"""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .errors import ConfigurationError, ModelBuildError

log = logging.getLogger(__name__)

BACKENDS = ("highs", "highs-ds", "highs-ipm")
_SENSES = {"<=": -1, "==": 0, ">=": 1, "<": -1, "=": 0, ">": 1}


@dataclass
class SolveOptions:
    backend: str | None = None
    time_limit: float | None = None
    feasibility_tol: float = 1e-7
    mip_rel_gap: float = 1e-6
    presolve: bool = True

    def resolved_backend(self) -> str:
        name = self.backend or os.environ.get("CAPROBUST_SOLVER", "highs-ds")
        if name not in BACKENDS:
            raise ConfigurationError(f"unknown solver backend {name!r}; choose one of {', '.join(BACKENDS)}")
        return name


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | limit | error
    objective: float | None
    x: np.ndarray | None
    wall_time: float
    message: str = ""
    max_violation: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, ids) -> np.ndarray | float:
        if self.x is None:
            raise ValueError(f"no primal values (status {self.status})")
        return self.x[np.asarray(ids)]


@dataclass
class _Block:
    name: str
    start: int
    shape: tuple


@dataclass
class Model:
    """Linear (mixed-binary) program under construction."""

    name: str = "model"
    sense: str = "min"
    lb: list = field(default_factory=list)
    ub: list = field(default_factory=list)
    binary: list = field(default_factory=list)
    var_blocks: list = field(default_factory=list)
    con_blocks: list = field(default_factory=list)
    obj_constant: float = 0.0

    def __post_init__(self):
        self._names: set[str] = set()
        self._n_vars = 0
        self._n_rows = 0
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._rsense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._obj: dict[int, float] = {}
        self._obj_ids: list[np.ndarray] = []
        self._obj_vals: list[np.ndarray] = []

    # -- variables ------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return self._n_vars

    @property
    def n_rows(self) -> int:
        return self._n_rows

    def _claim(self, name: str):
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", name):
            raise ModelBuildError(f"invalid name {name!r}")
        if name in self._names:
            raise ModelBuildError(f"duplicate name {name!r}")
        self._names.add(name)

    def add_vars(self, name: str, shape=(), lb=0.0, ub=np.inf, binary: bool = False) -> np.ndarray:
        """Add a block of variables; returns their ids with the block's shape."""
        shape = tuple(int(s) for s in np.atleast_1d(shape)) if shape != () else ()
        self._claim(name)
        size = int(np.prod(shape)) if shape else 1
        lo = np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel()
        hi = np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel()
        if binary:
            lo = np.maximum(lo, 0.0)
            hi = np.minimum(hi, 1.0)
        if np.any(lo > hi):
            raise ModelBuildError(f"{name}: lower bound exceeds upper bound")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ModelBuildError(f"{name}: NaN bound")
        ids = np.arange(self._n_vars, self._n_vars + size)
        self.var_blocks.append(_Block(name, self._n_vars, shape))
        self.lb.append(lo)
        self.ub.append(hi)
        self.binary.append(np.full(size, bool(binary)))
        self._n_vars += size
        return ids.reshape(shape) if shape else ids[0]

    def add_var(self, name: str, lb=0.0, ub=np.inf, binary: bool = False) -> int:
        return int(self.add_vars(name, (), lb, ub, binary))

    # -- constraints ----------------------------------------------------
    def add_constrs(self, name: str, terms, sense: str, rhs) -> np.ndarray:
        """Add one row per element of ``rhs`` (after broadcasting).

        ``terms`` is a sequence of ``(coef, ids)`` pairs; both broadcast to
        the row shape, and row ``k`` receives ``coef[k] * x[ids[k]]`` from
        every term.  A term ``(coef, ids, "sum")`` carries one extra trailing
        axis that is summed into each row.  Zero coefficients are dropped.
        """
        if sense not in _SENSES:
            raise ModelBuildError(f"{name}: unknown sense {sense!r}")
        shapes = [np.shape(rhs)]
        for term in terms:
            coef, ids = np.asarray(term[0], dtype=float), np.asarray(term[1])
            if len(term) == 3:
                full = np.broadcast_shapes(coef.shape, ids.shape)
                shapes.append(full[:-1])
            else:
                shapes.extend([coef.shape, ids.shape])
        shape = np.broadcast_shapes(*shapes)
        self._claim(name)
        size = int(np.prod(shape)) if shape else 1
        rows = np.arange(self._n_rows, self._n_rows + size)
        for term in terms:
            coef, ids = np.asarray(term[0], dtype=float), np.asarray(term[1])
            if len(term) == 3:
                if term[2] != "sum":
                    raise ModelBuildError(f"{name}: unknown term modifier {term[2]!r}")
                k = np.broadcast_shapes(coef.shape, ids.shape)[-1]
                full = shape + (k,)
                r = np.repeat(rows, k)
            else:
                full = shape
                r = rows
            c = np.broadcast_to(coef, full).ravel()
            v = np.broadcast_to(ids, full).ravel().astype(np.int64)
            if v.size and (v.min() < 0 or v.max() >= self._n_vars):
                raise ModelBuildError(f"{name}: coefficient references an unknown variable")
            keep = c != 0
            self._rows.append(r[keep])
            self._cols.append(v[keep])
            self._vals.append(c[keep])
        b = np.broadcast_to(np.asarray(rhs, dtype=float), shape).ravel()
        if not np.all(np.isfinite(b)):
            raise ModelBuildError(f"{name}: non-finite right-hand side")
        self._rsense.append(np.full(size, _SENSES[sense], dtype=np.int8))
        self._rhs.append(b.copy())
        self.con_blocks.append(_Block(name, self._n_rows, shape))
        self._n_rows += size
        return rows.reshape(shape)

    def add_constr(self, name: str, coeffs: dict, sense: str, rhs: float) -> int:
        """Add a single row ``sum(coeffs[id] * x[id]) (sense) rhs``."""
        if sense not in _SENSES:
            raise ModelBuildError(f"{name}: unknown sense {sense!r}")
        ids = np.array(list(coeffs.keys()), dtype=np.int64)
        vals = np.array(list(coeffs.values()), dtype=float)
        if ids.size and (ids.min() < 0 or ids.max() >= self._n_vars):
            raise ModelBuildError(f"{name}: coefficient references an unknown variable")
        if not np.isfinite(rhs):
            raise ModelBuildError(f"{name}: non-finite right-hand side")
        self._claim(name)
        row = self._n_rows
        keep = vals != 0
        self._rows.append(np.full(int(keep.sum()), row, dtype=np.int64))
        self._cols.append(ids[keep])
        self._vals.append(vals[keep])
        self._rsense.append(np.array([_SENSES[sense]], dtype=np.int8))
        self._rhs.append(np.array([float(rhs)]))
        self.con_blocks.append(_Block(name, row, ()))
        self._n_rows += 1
        return row

    # -- objective ------------------------------------------------------
    def add_objective(self, coef, ids) -> None:
        c, v = np.broadcast_arrays(np.asarray(coef, dtype=float), np.asarray(ids))
        v = v.ravel().astype(np.int64)
        if v.size and (v.min() < 0 or v.max() >= self._n_vars):
            raise ModelBuildError("objective references an unknown variable")
        self._obj_ids.append(v)
        self._obj_vals.append(c.ravel().astype(float))

    def set_sense(self, sense: str) -> None:
        if sense not in ("min", "max"):
            raise ModelBuildError("sense must be 'min' or 'max'")
        self.sense = sense

    # -- assembled arrays ----------------------------------------------
    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self._n_vars)
        if self._obj_ids:
            np.add.at(c, np.concatenate(self._obj_ids), np.concatenate(self._obj_vals))
        return c

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.lb:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(self.lb), np.concatenate(self.ub)

    def integrality(self) -> np.ndarray:
        if not self.binary:
            return np.zeros(0, dtype=bool)
        return np.concatenate(self.binary)

    def matrix(self) -> sp.csr_matrix:
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        a = sp.coo_matrix((vals, (rows, cols)), shape=(self._n_rows, self._n_vars)).tocsr()
        a.sum_duplicates()
        return a

    def row_senses(self) -> np.ndarray:
        return np.concatenate(self._rsense) if self._rsense else np.zeros(0, dtype=np.int8)

    def rhs(self) -> np.ndarray:
        return np.concatenate(self._rhs) if self._rhs else np.zeros(0)

    def row_group(self, row: int) -> str:
        for blk in reversed(self.con_blocks):
            if row >= blk.start:
                return blk.name
        raise IndexError(row)

    # -- names --------------------------------------------------------
    def var_names(self) -> list[str]:
        return _element_names(self.var_blocks, self._n_vars)

    def con_names(self) -> list[str]:
        return _element_names(self.con_blocks, self._n_rows)

    def violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of any row or bound at ``x``."""
        a, b, sense = self.matrix(), self.rhs(), self.row_senses()
        ax = a @ x
        viol = np.zeros_like(ax)
        viol = np.where(sense < 0, np.maximum(ax - b, 0), viol)
        viol = np.where(sense > 0, np.maximum(b - ax, 0), viol)
        viol = np.where(sense == 0, np.abs(ax - b), viol)
        lo, hi = self.bounds()
        worst = float(viol.max()) if viol.size else 0.0
        if x.size:
            worst = max(worst, float(np.maximum(lo - x, 0).max()), float(np.maximum(x - hi, 0).max()))
        return worst


def _element_names(blocks, total) -> list[str]:
    names = [""] * total
    for blk in blocks:
        if blk.shape == ():
            names[blk.start] = blk.name
            continue
        for k, idx in enumerate(np.ndindex(*blk.shape)):
            names[blk.start + k] = f"{blk.name}({','.join(map(str, idx))})"
    return names


# --------------------------------------------------------------------------
# solving


def _split_rows(model: Model):
    a, b, sense = model.matrix(), model.rhs(), model.row_senses()
    le, ge, eq = sense < 0, sense > 0, sense == 0
    a_ub = sp.vstack([a[le], -a[ge]]).tocsr()
    b_ub = np.concatenate([b[le], -b[ge]])
    return a_ub, b_ub, a[eq], b[eq]


def solve(model: Model, options: SolveOptions | None = None) -> SolveResult:
    """Solve ``model``; the status reflects the backend verbatim."""
    options = options or SolveOptions()
    backend = options.resolved_backend()
    c = model.objective_vector()
    if model.sense == "max":
        c = -c
    lo, hi = model.bounds()
    integ = model.integrality()
    t0 = time.perf_counter()
    if integ.any():
        res = _solve_mip(model, c, lo, hi, integ, options)
    else:
        res = _solve_lp(model, c, lo, hi, backend, options)
    status, x, fun, msg = res
    wall = time.perf_counter() - t0
    objective = None
    if x is not None:
        objective = float(fun if model.sense == "min" else -fun) + model.obj_constant
    result = SolveResult(status, objective, x, wall, msg)
    if x is not None:
        result.max_violation = model.violation(x)
    log.debug("%s: %s in %.2fs (%d vars, %d rows)", model.name, status, wall, model.n_vars, model.n_rows)
    return result


_LP_STATUS = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded", 4: "error"}


def _solve_lp(model, c, lo, hi, backend, options):
    a_ub, b_ub, a_eq, b_eq = _split_rows(model)
    method = {"highs": "highs", "highs-ds": "highs-ds", "highs-ipm": "highs-ipm"}[backend]
    opts = {
        "presolve": options.presolve,
        "primal_feasibility_tolerance": options.feasibility_tol,
        "dual_feasibility_tolerance": options.feasibility_tol,
    }
    if options.time_limit is not None:
        opts["time_limit"] = float(options.time_limit)
    res = linprog(
        c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=a_eq if a_eq.shape[0] else None,
        b_eq=b_eq if a_eq.shape[0] else None,
        bounds=np.column_stack([lo, hi]) if lo.size else None,
        method=method,
        options=opts,
    )
    status = _LP_STATUS.get(res.status, "error")
    x = res.x if status == "optimal" else None
    return status, x, res.fun if x is not None else None, res.message


def _solve_mip(model, c, lo, hi, integ, options):
    a, b, sense = model.matrix(), model.rhs(), model.row_senses()
    row_lo = np.where(sense < 0, -np.inf, b)
    row_hi = np.where(sense > 0, np.inf, b)
    opts = {"presolve": options.presolve, "mip_rel_gap": options.mip_rel_gap}
    if options.time_limit is not None:
        opts["time_limit"] = float(options.time_limit)
    cons = [LinearConstraint(a, row_lo, row_hi)] if a.shape[0] else []
    res = milp(c, integrality=integ.astype(int), bounds=Bounds(lo, hi), constraints=cons, options=opts)
    status = _LP_STATUS.get(res.status, "error")
    x = None
    if res.x is not None and status in ("optimal", "limit"):
        x = np.where(integ, np.round(res.x), res.x)
    fun = float(c @ x) if x is not None else None
    return status, x, fun, res.message


def diagnose_infeasibility(model: Model, options: SolveOptions | None = None, top: int = 10) -> dict[str, float]:
    """Elastic re-solve: slack on every row, minimise total slack, report per group.

    Returns the total slack each constraint group needed; an empty dict
    means the elastic problem was itself unsolvable.
    """
    a, b, sense = model.matrix(), model.rhs(), model.row_senses()
    m, n = a.shape
    lo, hi = model.bounds()
    # rows:  a x + s_pos - s_neg  (sense) b,  slacks >= 0
    big = sp.hstack([a, sp.eye(m), -sp.eye(m)]).tocsr()
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    le, ge, eq = sense < 0, sense > 0, sense == 0
    a_ub = sp.vstack([big[le], -big[ge]])
    b_ub = np.concatenate([b[le], -b[ge]])
    bounds = np.column_stack([np.concatenate([lo, np.zeros(2 * m)]), np.concatenate([hi, np.full(2 * m, np.inf)])])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=big[eq], b_eq=b[eq], bounds=bounds, method="highs")
    if res.status != 0:
        return {}
    slack = res.x[n : n + m] + res.x[n + m :]
    out: dict[str, float] = {}
    for blk in model.con_blocks:
        size = int(np.prod(blk.shape)) if blk.shape else 1
        total = float(slack[blk.start : blk.start + size].sum())
        if total > 1e-6:
            out[blk.name] = total
    return dict(sorted(out.items(), key=lambda kv: -kv[1])[:top])


# --------------------------------------------------------------------------
# LP text format


def _fmt(v: float) -> str:
    return repr(float(v))


def write_lp(model: Model, path) -> None:
    names = model.var_names()
    cnames = model.con_names()
    c = model.objective_vector()
    out = [f"\\ {model.name}", "Maximize" if model.sense == "max" else "Minimize"]
    terms = [f"{'-' if v < 0 else '+'} {_fmt(abs(v))} {names[j]}" for j, v in enumerate(c) if v != 0]
    if model.obj_constant:
        terms.append(f"{'-' if model.obj_constant < 0 else '+'} {_fmt(abs(model.obj_constant))}")
    out.append(" obj: " + (" ".join(terms) if terms else "0 " + (names[0] if names else "")))
    out.append("Subject To")
    a = model.matrix().tocsr()
    b, sense = model.rhs(), model.row_senses()
    sym = {-1: "<=", 0: "=", 1: ">="}
    for i in range(a.shape[0]):
        lo_, hi_ = a.indptr[i], a.indptr[i + 1]
        parts = [
            f"{'-' if v < 0 else '+'} {_fmt(abs(v))} {names[j]}" for j, v in zip(a.indices[lo_:hi_], a.data[lo_:hi_])
        ]
        if not parts:
            parts = [f"+ 0 {names[0]}"]
        out.append(f" {cnames[i]}: {' '.join(parts)} {sym[int(sense[i])]} {_fmt(b[i])}")
    out.append("Bounds")
    lo, hi = model.bounds()
    integ = model.integrality()
    for j, nm in enumerate(names):
        if integ[j] and lo[j] == 0 and hi[j] == 1:
            continue
        if lo[j] == -np.inf and hi[j] == np.inf:
            out.append(f" {nm} free")
        else:
            out.append(f" {_fmt_bound(lo[j])} <= {nm} <= {_fmt_bound(hi[j])}")
    if integ.any():
        out.append("Binaries")
        out.extend(f" {names[j]}" for j in np.flatnonzero(integ))
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _fmt_bound(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return _fmt(v)


def _parse_terms(tokens: list[str]):
    """Pairs (coef, name) and a constant from ``[sign] coef [name]`` tokens."""
    terms, const = [], 0.0
    k = 0
    while k < len(tokens):
        sign = 1.0
        if tokens[k] in "+-":
            sign = -1.0 if tokens[k] == "-" else 1.0
            k += 1
        coef = float(tokens[k])
        k += 1
        if k < len(tokens) and tokens[k] not in "+-" and not _is_number(tokens[k]):
            terms.append((sign * coef, tokens[k]))
            k += 1
        else:
            const += sign * coef
    return terms, const


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_lp(path) -> Model:
    """Parse a file written by :func:`write_lp` into a fresh model.

    Every variable becomes its own scalar block named as in the file.
    """
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("\\")]
    section = None
    obj_line = ""
    rows, bounds, binaries = [], {}, []
    sense = "min"
    for ln in lines:
        low = ln.lower()
        if low in ("minimize", "maximize"):
            section, sense = "obj", "min" if low == "minimize" else "max"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            obj_line += " " + ln.split(":", 1)[1]
        elif section == "rows":
            name, body = ln.split(":", 1)
            toks = body.split()
            rows.append((name.strip(), toks[:-2], toks[-2], float(toks[-1])))
        elif section == "bounds":
            toks = ln.split()
            if len(toks) == 2 and toks[1] == "free":
                bounds[toks[0]] = (-np.inf, np.inf)
            else:
                bounds[toks[2]] = (float(toks[0]), float(toks[4]))
        elif section == "bin":
            binaries.append(ln)
    obj_terms, const = _parse_terms(obj_line.split())
    order: list[str] = []
    seen = set()

    def note(nm):
        if nm not in seen:
            seen.add(nm)
            order.append(nm)

    for _, nm in obj_terms:
        note(nm)
    parsed_rows = []
    for name, toks, sym, rhs in rows:
        terms, _ = _parse_terms(toks)
        for _, nm in terms:
            note(nm)
        parsed_rows.append((name, terms, sym, rhs))
    for nm in list(bounds) + binaries:
        note(nm)
    model = Model(name=Path(path).stem, sense=sense)
    ids = {}
    binset = set(binaries)
    for nm in order:
        lo, hi = bounds.get(nm, (0.0, 1.0) if nm in binset else (0.0, np.inf))
        ids[nm] = model.add_var(_safe(nm), lo, hi, binary=nm in binset)
    for name, terms, sym, rhs in parsed_rows:
        coeffs: dict[int, float] = {}
        for cval, nm in terms:
            coeffs[ids[nm]] = coeffs.get(ids[nm], 0.0) + cval
        model.add_constr(_safe(name), coeffs, {"<=": "<=", "=": "==", ">=": ">="}[sym], rhs)
    for cval, nm in obj_terms:
        model.add_objective(cval, ids[nm])
    model.obj_constant = const
    return model


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", name)
