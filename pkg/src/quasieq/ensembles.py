"""Maximum-entropy ensembles of directed graphs fitted by maximum likelihood.

Three models are supported:

``DRG``
    one global constraint, the number of links ``L``; every directed link is
    an independent Bernoulli(p) with ``p = L / (n (n - 1))``.
``DCM``
    in- and out-degree of every node; ``p_ij = x_i y_j / (1 + x_i y_j)``
    independently for every ordered pair.
``RCM``
    non-reciprocated out-, non-reciprocated in- and reciprocated degree of
    every node; each dyad takes one of four states with weights
    ``1, x_i y_j, x_j y_i, z_i z_j`` over the common denominator.

All three factorise over dyads, so a fitted model is fully described by the
``(4, n, n)`` array returned by :meth:`FittedEnsemble.state_probabilities`.
"""
from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000
SATURATION_LEVEL = 1.0 - 1e-9

# fixed-point sweeps tried before switching to Newton steps in log space
_FIXED_POINT_SWEEPS = 300
_MAX_LOG_STEP = 5.0


class ModelKind(str, enum.Enum):
    DRG = "drg"
    DCM = "dcm"
    RCM = "rcm"

    @classmethod
    def parse(cls, value: "str | ModelKind") -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown model {value!r}; expected one of drg, dcm, rcm") from None


class FitError(RuntimeError):
    pass


class ConvergenceError(FitError):
    """Raised when a fit misses its tolerance; carries the best iterate."""

    def __init__(self, message: str, ensemble: "FittedEnsemble"):
        super().__init__(message)
        self.ensemble = ensemble


class DegenerateGraphError(FitError):
    pass


class NearSaturationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DyadProbabilities:
    p_out: float
    p_in: float
    p_both: float
    p_empty: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_out, self.p_in, self.p_both, self.p_empty)


@dataclass(frozen=True, eq=False)
class FittedEnsemble:
    """Fitted parameters of one model on one graph.

    For the DRG only ``p`` (and ``x = p / (1 - p)``) is meaningful; for the
    DCM ``z`` is ``None``. ``residual`` is the largest relative constraint
    error of the returned parameters.
    """

    kind: ModelKind
    n: int
    x: np.ndarray
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    p: float | None = None
    residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    notes: tuple[str, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def state_probabilities(self) -> np.ndarray:
        """``(4, n, n)`` array ``P[s, i, j]`` of dyad-state probabilities.

        ``s`` follows :class:`~quasieq.graph.DyadState` seen from ``(i, j)``.
        The diagonal is zero in every layer.
        """
        if "P" not in self._cache:
            P = _state_probabilities(self)
            P.setflags(write=False)
            self._cache["P"] = P
        return self._cache["P"]

    def link_probabilities(self) -> np.ndarray:
        """``n x n`` matrix of ``<a_ij>``."""
        P = self.state_probabilities()
        return P[1] + P[3]

    def dyad_probabilities(self, i: int, j: int) -> DyadProbabilities:
        return dyad_probabilities(self, i, j)

    def expected_constraints(self) -> dict[str, np.ndarray]:
        P = self.state_probabilities()
        return {
            "k_out": (P[1] + P[3]).sum(axis=1),
            "k_in": (P[2] + P[3]).sum(axis=1),
            "k_right": P[1].sum(axis=1),
            "k_left": P[2].sum(axis=1),
            "k_both": P[3].sum(axis=1),
        }

    def parameters(self) -> dict:
        out: dict = {"kind": self.kind.value, "n": self.n}
        if self.kind is ModelKind.DRG:
            out["p"] = self.p
            out["x"] = float(self.x[0])
        else:
            out["x"] = self.x.tolist()
            out["y"] = self.y.tolist()
            if self.z is not None:
                out["z"] = self.z.tolist()
        out.update(
            residual=self.residual,
            iterations=self.iterations,
            converged=self.converged,
            degenerate=self.degenerate,
            notes=list(self.notes),
        )
        return out


def _state_probabilities(e: FittedEnsemble) -> np.ndarray:
    n = e.n
    P = np.empty((4, n, n))
    if e.kind is ModelKind.DRG:
        p = float(e.p)
        P[0] = (1 - p) ** 2
        P[1] = P[2] = p * (1 - p)
        P[3] = p * p
    elif e.kind is ModelKind.DCM:
        w = np.outer(e.x, e.y)
        q = 1.0 / (1.0 + w)  # 1 - p_ij, kept separate to avoid cancellation
        p = w * q
        P[0] = q * q.T
        P[1] = p * q.T
        P[2] = q * p.T
        P[3] = p * p.T
    else:
        w = np.outer(e.x, e.y)
        zz = np.outer(e.z, e.z)
        d = 1.0 + (w + w.T) + zz  # grouped so that d is exactly symmetric
        P[0] = 1.0 / d
        P[1] = w / d
        P[2] = w.T / d
        P[3] = zz / d
    idx = np.arange(n)
    P[:, idx, idx] = 0.0
    return P


def dyad_probabilities(e: FittedEnsemble, i: int, j: int) -> DyadProbabilities:
    if i == j:
        raise ValueError("a dyad needs two distinct nodes")
    P = e.state_probabilities()
    return DyadProbabilities(
        p_out=float(P[1, i, j]),
        p_in=float(P[2, i, j]),
        p_both=float(P[3, i, j]),
        p_empty=float(P[0, i, j]),
    )


def log_likelihood(e: FittedEnsemble, g: DirectedGraph) -> float:
    """Log-probability of ``g`` under ``e``; ``-inf`` if ``g`` is impossible."""
    if e.n != g.n:
        raise ValueError(f"ensemble has {e.n} nodes, graph has {g.n}")
    P = e.state_probabilities()
    s = g.state_matrix()
    iu, ju = np.triu_indices(g.n, k=1)
    probs = P[s[iu, ju], iu, ju]
    if np.any(probs <= 0.0):
        return float("-inf")
    return float(np.log(probs).sum())


# ---------------------------------------------------------------------------
# DRG


def fit_drg(g: DirectedGraph) -> FittedEnsemble:
    n = g.n
    if n < 2:
        raise ValueError("fitting needs at least two nodes")
    n_pairs = n * (n - 1)
    links = g.n_links
    p = links / n_pairs
    degenerate = links == 0 or links == n_pairs
    notes = ()
    if degenerate:
        notes = (f"degenerate DRG: p = {p:g}, z-scores are undefined",)
        log.warning(notes[0])
    x = p / (1.0 - p) if p < 1.0 else np.inf
    return FittedEnsemble(
        kind=ModelKind.DRG,
        n=n,
        x=np.array([x]),
        p=p,
        residual=0.0,
        iterations=0,
        degenerate=degenerate,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# DCM / RCM


class _Problem:
    """Constraint system of the DCM or RCM for one graph.

    Parameters live in one flat vector ``v`` of length ``m * n`` laid out as
    ``[x, y]`` or ``[x, y, z]``; ``targets`` holds the matching observed
    constraints (out, in) or (right, left, both).
    """

    def __init__(self, kind: ModelKind, g: DirectedGraph):
        self.kind = kind
        self.n = n = g.n
        deg = g.degrees()
        if kind is ModelKind.DCM:
            self.targets = np.concatenate([deg.k_out, deg.k_in]).astype(float)
            self.names = ("k_out", "k_in")
        else:
            self.targets = np.concatenate([deg.k_right, deg.k_left, deg.k_both]).astype(float)
            self.names = ("k_right", "k_left", "k_both")
        self.m = len(self.names)
        self.free = self.targets > 0
        self._diag = np.arange(n)
        # Hessian scatter indices over ordered pairs i != j
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
        self._ii, self._jj = ii, jj

    def split(self, v):
        n = self.n
        return [v[k * n:(k + 1) * n] for k in range(self.m)]

    def initial(self) -> np.ndarray:
        t = self.split(self.targets)
        if self.kind is ModelKind.DCM:
            total = self.targets[: self.n].sum()
            scale = [np.sqrt(total) or 1.0] * 2
        else:
            one_way = t[0].sum()
            both = t[2].sum()
            scale = [np.sqrt(one_way) or 1.0] * 2 + [np.sqrt(both) or 1.0]
        v = np.concatenate([tk / sk for tk, sk in zip(t, scale)])
        v[~self.free] = 0.0
        return v

    def expected(self, v) -> np.ndarray:
        if self.kind is ModelKind.DCM:
            x, y = self.split(v)
            w = np.outer(x, y)
            p = w / (1.0 + w)
            p[self._diag, self._diag] = 0.0
            return np.concatenate([p.sum(axis=1), p.sum(axis=0)])
        x, y, z = self.split(v)
        w = np.outer(x, y)
        zz = np.outer(z, z)
        d = 1.0 + w + w.T + zz
        a, c = w / d, zz / d
        a[self._diag, self._diag] = 0.0
        c[self._diag, self._diag] = 0.0
        return np.concatenate([a.sum(axis=1), a.sum(axis=0), c.sum(axis=1)])

    def residual(self, v) -> float:
        err = np.abs(self.expected(v) - self.targets)
        scale = np.where(self.targets > 0, self.targets, 1.0)
        return float(np.max(err / scale)) if err.size else 0.0

    def fixed_point(self, v) -> np.ndarray:
        """One synchronous sweep ``x_i <- k_i / sum_j d<k_i>/dx_i``."""
        n = self.n
        off = ~np.eye(n, dtype=bool)
        if self.kind is ModelKind.DCM:
            x, y = self.split(v)
            dx = (y[None, :] / (1.0 + np.outer(x, y)) * off).sum(axis=1)
            dy = (x[:, None] / (1.0 + np.outer(x, y)) * off).sum(axis=0)
            denom = np.concatenate([dx, dy])
        else:
            x, y, z = self.split(v)
            w = np.outer(x, y)
            d = 1.0 + w + w.T + np.outer(z, z)
            inv = off / d
            denom = np.concatenate([inv @ y, inv @ x, inv @ z])
        new = np.zeros_like(v)
        ok = self.free & (denom > 0)
        new[ok] = self.targets[ok] / denom[ok]
        return new

    # log-space quantities, theta = log(v) on free entries

    def log_likelihood(self, v) -> float:
        n = self.n
        with np.errstate(divide="ignore"):
            lv = np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), 0.0)
        head = float(np.dot(self.targets, lv))
        if self.kind is ModelKind.DCM:
            x, y = self.split(v)
            w = np.outer(x, y)
            w[self._diag, self._diag] = 0.0
            return head - float(np.log1p(w).sum())
        x, y, z = self.split(v)
        w = np.outer(x, y)
        d = 1.0 + w + w.T + np.outer(z, z)
        iu = np.triu_indices(n, k=1)
        return head - float(np.log(d[iu]).sum())

    def hessian(self, v) -> np.ndarray:
        """Negative log-likelihood Hessian in log-parameters (covariance)."""
        n, m = self.n, self.m
        ii, jj = self._ii, self._jj
        H = np.zeros((m * n, m * n))
        if self.kind is ModelKind.DCM:
            x, y = self.split(v)
            w = np.outer(x, y)
            var = (w / (1.0 + w) ** 2)[ii, jj]
            # the link i->j feeds x_i and y_j
            rows = [ii, n + jj]
            for r in rows:
                for c in rows:
                    np.add.at(H, (r, c), var)
            return H
        x, y, z = self.split(v)
        w = np.outer(x, y)
        zz = np.outer(z, z)
        d = 1.0 + w + w.T + zz
        probs = [(w / d)[ii, jj], (w.T / d)[ii, jj], (zz / d)[ii, jj]]
        # each ordered pair (i, j) visits the unordered dyad once from each
        # side; the state i->j only feeds x_i and y_j, j->i only feeds x_j
        # and y_i, the mutual state feeds z_i and z_j
        slots = [[ii, n + jj], [jj, n + ii], [2 * n + ii, 2 * n + jj]]
        for a in range(3):
            for b in range(3):
                cov = probs[a] * ((1.0 if a == b else 0.0) - probs[b])
                for r in slots[a]:
                    for c in slots[b]:
                        np.add.at(H, (r, c), 0.5 * cov)
        return H


def _solve(kind: ModelKind, g: DirectedGraph, tol: float, max_iter: int) -> FittedEnsemble:
    if g.n < 2:
        raise ValueError("fitting needs at least two nodes")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.n
    if g.n_links == n * (n - 1):
        raise DegenerateGraphError(
            f"{kind.value.upper()} cannot be fitted to the complete graph: every "
            "constraint is saturated and the parameters diverge"
        )
    prob = _Problem(kind, g)
    v = prob.initial()
    res = prob.residual(v)
    best_v, best_res = v, res
    it = 0

    sweeps = min(max_iter, _FIXED_POINT_SWEEPS)
    while res > tol and it < sweeps:
        cand = prob.fixed_point(v)
        cand_res = prob.residual(cand)
        if cand_res > res:
            cand = v + 0.5 * (cand - v)
            cand_res = prob.residual(cand)
        v, res = cand, cand_res
        it += 1
        if res < best_res:
            best_v, best_res = v, res

    v, res = best_v, best_res
    free = prob.free
    while res > tol and it < max_iter:
        grad = (prob.targets - prob.expected(v))[free]
        H = prob.hessian(v)[np.ix_(free, free)]
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        big = np.max(np.abs(step)) if step.size else 0.0
        if big > _MAX_LOG_STEP:
            step *= _MAX_LOG_STEP / big
        ll = prob.log_likelihood(v)
        t = 1.0
        for _ in range(40):
            cand = v.copy()
            cand[free] = v[free] * np.exp(t * step)
            cand_ll = prob.log_likelihood(cand)
            if cand_ll >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        cand_res = prob.residual(cand)
        it += 1
        if cand_res < best_res:
            best_v, best_res = cand, cand_res
        elif t < 1e-9:
            break
        v, res = cand, cand_res

    v, res = best_v, best_res
    parts = prob.split(v.copy())
    for arr in parts:
        arr.setflags(write=False)
    e = FittedEnsemble(
        kind=kind,
        n=n,
        x=parts[0],
        y=parts[1],
        z=parts[2] if kind is ModelKind.RCM else None,
        residual=res,
        iterations=it,
        converged=res <= tol,
    )
    notes = []
    if np.any(e.link_probabilities() > SATURATION_LEVEL):
        msg = "near saturation: some link probabilities exceed 1 - 1e-9"
        warnings.warn(msg, NearSaturationWarning, stacklevel=3)
        notes.append(msg)
    if not e.converged:
        notes.append(f"not converged after {it} iterations (residual {res:.3e} > tol {tol:.1e})")
    if notes:
        object.__setattr__(e, "notes", tuple(notes))
    if not e.converged:
        raise ConvergenceError(notes[-1], e)
    return e


def fit_dcm(g: DirectedGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FittedEnsemble:
    """Fit the directed configuration model to the degrees of ``g``.

    Raises
    ------
    ConvergenceError
        If the maximum relative degree error is still above ``tol`` after
        ``max_iter`` iterations. The best iterate is attached as
        ``exc.ensemble``.
    DegenerateGraphError
        For the complete graph.
    """
    return _solve(ModelKind.DCM, g, tol, max_iter)


def fit_rcm(g: DirectedGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FittedEnsemble:
    """Fit the reciprocal configuration model; see :func:`fit_dcm`."""
    return _solve(ModelKind.RCM, g, tol, max_iter)


def fit(
    g: DirectedGraph,
    model: "ModelKind | str",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    allow_unconverged: bool = False,
) -> FittedEnsemble:
    """Dispatch to the fitter of ``model``.

    With ``allow_unconverged`` a convergence failure returns the best
    iterate (``converged=False``) instead of raising.
    """
    kind = ModelKind.parse(model)
    if kind is ModelKind.DRG:
        return fit_drg(g)
    try:
        return _solve(kind, g, tol, max_iter)
    except ConvergenceError as exc:
        if not allow_unconverged:
            raise
        log.warning("using unconverged %s fit: %s", kind.value, exc)
        return exc.ensemble


def ensemble_from_parameters(kind, n, x=None, y=None, z=None, p=None) -> FittedEnsemble:
    """Build an ensemble directly from parameters (no fitting)."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.DRG:
        if p is None:
            raise ValueError("DRG needs p")
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        x_val = p / (1.0 - p) if p < 1.0 else np.inf
        return FittedEnsemble(kind, int(n), np.array([x_val]), p=p, degenerate=p in (0.0, 1.0))
    arrays = []
    needed = (x, y) if kind is ModelKind.DCM else (x, y, z)
    for arr in needed:
        if arr is None:
            raise ValueError(f"{kind.value.upper()} needs x, y" + (", z" if kind is ModelKind.RCM else ""))
        a = np.array(arr, dtype=float).reshape(-1)
        if a.shape != (n,) or np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("parameters must be finite, non-negative, one per node")
        a.setflags(write=False)
        arrays.append(a)
    return FittedEnsemble(kind, int(n), arrays[0], arrays[1], arrays[2] if kind is ModelKind.RCM else None)
