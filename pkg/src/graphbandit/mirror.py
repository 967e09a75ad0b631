"""Online mirror descent over constrained simplices.

Regularizers are separable sums of negative-entropy and log-barrier terms,

    psi(p) = sum_i a_i * p_i * ln(p_i) + b_i * ln(1 / p_i),

with ``a_i, b_i >= 0``. The OMD step

    argmin_{p in Omega} <p, loss> + D_psi(p, p_t)

is solved through its KKT system: every free coordinate satisfies
``grad psi(p)_i = grad psi(p_t)_i - loss_i + lam (+ nu_G) (+ mu_i)``, the scalar
multipliers are found by monotone Newton iterations, and per-coordinate
inverses of ``grad psi`` are closed form except for mixed coordinates.

Probability vectors are plain float ``ndarray``s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels

LOSS_SENTINEL = 1e12
KKT_TOL = 1e-8
SUM_TOL = 1e-9
# coordinates are never driven below this; keeps grad psi finite
P_FLOOR = 1e-300


class SolverError(RuntimeError):
    """The OMD solve failed to converge or violated its optimality check."""


class InfeasibleDecisionSet(ValueError):
    pass


@dataclass(frozen=True)
class RegularizerSpec:
    """Per-coordinate entropy weights ``a`` and log-barrier weights ``b``.

    A zero weight means the component is absent. Coordinates with no
    component at all are only allowed where the decision set pins them to 0.
    """

    entropy: np.ndarray
    barrier: np.ndarray

    def __post_init__(self):
        a = np.array(self.entropy, dtype=float).reshape(-1)
        b = np.array(self.barrier, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("entropy and barrier weights differ in length")
        if np.any(a < 0) or np.any(b < 0) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("regularizer weights must be finite and nonnegative")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "entropy", a)
        object.__setattr__(self, "barrier", b)

    @classmethod
    def from_components(cls, components) -> "RegularizerSpec":
        """Build from a per-coordinate list of ``(kind, weight)`` pairs."""
        k = len(components)
        a, b = np.zeros(k), np.zeros(k)
        for i, comps in enumerate(components):
            for kind, w in comps:
                if w <= 0:
                    raise ValueError("component weights must be strictly positive")
                if kind == "neg_entropy":
                    a[i] += w
                elif kind == "log_barrier":
                    b[i] += w
                else:
                    raise ValueError(f"unknown component {kind!r}")
        return cls(a, b)

    @classmethod
    def hybrid(cls, k: int, entropy_weight: float, barrier_weight: float) -> "RegularizerSpec":
        return cls(np.full(k, float(entropy_weight)), np.full(k, float(barrier_weight)))

    @property
    def dim(self) -> int:
        return self.entropy.size

    @cached_property
    def present(self) -> np.ndarray:
        return (self.entropy > 0) | (self.barrier > 0)


@dataclass(frozen=True)
class DecisionSet:
    """Subset of the simplex defined by lower bounds, group minima and zero pins.

    Parameters
    ----------
    dim : int
    lower_bounds : array_like, optional
        Per-coordinate minimum probability.
    groups : sequence of (indices, min_mass), optional
        Pairwise disjoint index sets whose total mass must reach ``min_mass``.
    zero_set : iterable of int, optional
        Coordinates fixed to exactly zero.
    """

    dim: int
    lower_bounds: np.ndarray = None
    groups: tuple = ()
    zero_set: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        k = int(self.dim)
        lb = np.zeros(k) if self.lower_bounds is None else np.array(self.lower_bounds, dtype=float)
        if lb.shape == ():
            lb = np.full(k, float(lb))
        if lb.shape != (k,):
            raise InfeasibleDecisionSet("lower bounds have the wrong length")
        zero = frozenset(int(i) for i in self.zero_set)
        if any(not 0 <= i < k for i in zero):
            raise InfeasibleDecisionSet("zero-set index out of range")
        lb[list(zero)] = 0.0
        if np.any(lb < 0) or np.any(lb >= 1):
            raise InfeasibleDecisionSet("lower bounds must lie in [0, 1)")
        groups = tuple((tuple(sorted(int(i) for i in idx)), float(m)) for idx, m in self.groups)
        seen: set[int] = set()
        for idx, m in groups:
            if seen & set(idx):
                raise InfeasibleDecisionSet("group constraints must be disjoint")
            seen |= set(idx)
            if set(idx) & zero:
                raise InfeasibleDecisionSet("group contains pinned coordinates")
        need = lb.sum()
        for idx, m in groups:
            need += max(0.0, m - lb[list(idx)].sum())
        if need > 1 + 1e-12:
            raise InfeasibleDecisionSet(f"constraints need total mass {need:.6g} > 1")
        if len(zero) >= k:
            raise InfeasibleDecisionSet("every coordinate is pinned to zero")
        lb.setflags(write=False)
        object.__setattr__(self, "dim", k)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "zero_set", zero)

    @classmethod
    def simplex(cls, k: int) -> "DecisionSet":
        return cls(k)

    @cached_property
    def free(self) -> np.ndarray:
        return np.array([i for i in range(self.dim) if i not in self.zero_set], dtype=np.intp)

    @cached_property
    def free_lower_bounds(self) -> np.ndarray:
        return self.lower_bounds[self.free]

    @cached_property
    def free_groups(self) -> tuple:
        pos = {int(i): r for r, i in enumerate(self.free)}
        return tuple(
            (np.array([pos[i] for i in idx], dtype=np.intp), m) for idx, m in self.groups
        )

    @cached_property
    def free_group_masks(self) -> tuple:
        masks = []
        for rows, _ in self.free_groups:
            m = np.zeros(self.free.size, dtype=bool)
            m[rows] = True
            masks.append(m)
        return tuple(masks)

    @cached_property
    def free_rest_mask(self) -> np.ndarray:
        m = np.ones(self.free.size, dtype=bool)
        for g in self.free_group_masks:
            m &= ~g
        return m

    @cached_property
    def _zero_idx(self) -> np.ndarray:
        return np.array(sorted(self.zero_set), dtype=np.intp)

    def is_feasible(self, p, tol: float = SUM_TOL) -> bool:
        return self.violation(p) <= tol

    def violation(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return np.inf
        v = max(abs(p.sum() - 1.0), float(np.max(self.lower_bounds - p)))
        if self.zero_set:
            v = max(v, float(np.max(np.abs(p[self._zero_idx]))))
        for idx, m in self.groups:
            v = max(v, m - p[list(idx)].sum())
        return v


# --- regularizer calculus -------------------------------------------------


def psi(reg: RegularizerSpec, p) -> float:
    p = np.asarray(p, dtype=float)
    a, b = reg.entropy, reg.barrier
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(a > 0, a * np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0), 0.0)
        bar = np.where(b > 0, -b * np.log(p), 0.0)
    return float(np.sum(ent) + np.sum(bar))


def _check_positive(reg: RegularizerSpec, p: np.ndarray) -> None:
    bad = reg.present & ~(p > 0)
    if np.any(bad):
        raise ValueError(f"coordinates {np.flatnonzero(bad).tolist()} must be strictly positive")


def grad_psi(reg: RegularizerSpec, p) -> np.ndarray:
    """Gradient of ``psi``; coordinates without components get 0."""
    p = np.asarray(p, dtype=float)
    _check_positive(reg, p)
    safe = np.where(reg.present, p, 1.0)
    return np.where(reg.present, _grad(reg.entropy, reg.barrier, safe), 0.0)


def hessian_diag(reg: RegularizerSpec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    _check_positive(reg, p)
    safe = np.where(reg.present, p, 1.0)
    return np.where(reg.present, reg.entropy / safe + reg.barrier / safe**2, 0.0)


def bregman(reg: RegularizerSpec, p, q) -> float:
    """``D_psi(p, q) = psi(p) - psi(q) - <grad psi(q), p - q>``.

    Evaluated componentwise: entropy gives ``a (p ln(p/q) - p + q)``, the
    log-barrier gives ``b h(p/q)`` with ``h(x) = x - 1 - ln x``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_positive(reg, q)
    m = reg.present
    a, b = reg.entropy[m], reg.barrier[m]
    pm, qm = p[m], q[m]
    if np.any(pm < 0):
        raise ValueError("p must be nonnegative")
    with np.errstate(divide="ignore"):
        kl = np.where(pm > 0, pm * np.log(np.where(pm > 0, pm, 1.0) / qm), 0.0) - pm + qm
        r = pm / qm
        h = np.where(b > 0, r - 1.0 - np.log(r), 0.0)
    total = np.sum(np.where(a > 0, a * kl, 0.0)) + np.sum(np.where(b > 0, b * h, 0.0))
    return float(total)


def local_norm_shifted(reg: RegularizerSpec, p, est, z: float) -> float:
    """``||est - z 1||^2`` in the inverse-Hessian norm of ``psi`` at ``p``."""
    h = hessian_diag(reg, p)
    m = reg.present
    if np.any(h[m] <= 0) or not np.all(np.isfinite(h[m])):
        raise ValueError("degenerate Hessian entry")
    d = np.asarray(est, dtype=float)[m] - z
    return float(np.sum(d * d / h[m]))


def best_shift(reg: RegularizerSpec, p, est) -> float:
    """Shift ``z`` minimising :func:`local_norm_shifted` (inverse-Hessian weighted mean)."""
    h = hessian_diag(reg, p)
    m = reg.present
    w = 1.0 / h[m]
    return float(np.sum(w * np.asarray(est, dtype=float)[m]) / np.sum(w))


def check_multiplicative_stability(p, p_next) -> bool:
    p = np.asarray(p, dtype=float)
    q = np.asarray(p_next, dtype=float)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    m = p > 0
    return bool(np.all(q[m] >= 0.5 * p[m]) and np.all(q[m] <= 2.0 * p[m]))


# --- solver internals -------------------------------------------------------


def _grad(a, b, p):
    return a * (1.0 + np.log(p)) - b / p


def _fill(a, b, lb, y, mass):
    out = np.empty(y.size)
    lam, status = _kernels.fill(a, b, lb, y, float(mass), P_FLOOR, out)
    if status == _kernels.INNER_FAIL:
        raise SolverError(f"coordinate inverse did not converge (lam={lam:.6g})")
    if status == _kernels.OUTER_FAIL:
        raise SolverError(f"dual multiplier search did not converge (lam={lam:.6g})")
    return out


def _solve_free(a, b, lb, groups, y, tol=1e-12):
    """Active-set loop over the group constraints, in free-index space."""
    if not groups:
        return _fill(a, b, lb, y, 1.0)
    n = y.size
    active: list[int] = []
    for _ in range(len(groups) + 1):
        p = np.empty(n)
        rest = np.ones(n, dtype=bool)
        rest_mass = 1.0
        for gi in active:
            idx, m = groups[gi]
            mass = max(m, float(lb[idx].sum()))
            p[idx] = _fill(a[idx], b[idx], lb[idx], y[idx], mass)
            rest[idx] = False
            rest_mass -= mass
        if rest.any():
            p[rest] = _fill(a[rest], b[rest], lb[rest], y[rest], rest_mass)
        elif abs(rest_mass) > 1e-12:
            raise SolverError("active groups cannot absorb the remaining mass")
        violated = [
            gi for gi, (idx, m) in enumerate(groups)
            if gi not in active and p[idx].sum() < m - tol
        ]
        if not violated:
            return p
        active.extend(violated)
    raise SolverError("active-set projection did not terminate")


def _solve(reg: RegularizerSpec, omega: DecisionSet, y_free: np.ndarray) -> np.ndarray:
    free = omega.free
    a, b = reg.entropy[free], reg.barrier[free]
    if np.any((a == 0) & (b == 0)):
        raise ValueError("free coordinates need at least one regularizer component")
    p_free = _solve_free(a, b, omega.free_lower_bounds, omega.free_groups, y_free)
    if free.size == omega.dim:
        return p_free
    out = np.zeros(omega.dim)
    out[free] = p_free
    return out


def kkt_residual(reg: RegularizerSpec, omega: DecisionSet, target: np.ndarray, p) -> float:
    """Scaled KKT residual of ``p`` for the problem with dual target ``target``.

    ``target`` holds ``grad psi(p_t) - loss`` on the free coordinates (in free
    order). Stationarity and complementary slackness are measured relative to
    the magnitude of the gradients involved; primal feasibility is absolute.
    """
    p = np.asarray(p, dtype=float)
    free = omega.free
    pf = p[free]
    if np.any(pf <= 0):
        return np.inf
    a, b = reg.entropy[free], reg.barrier[free]
    g = _grad(a, b, pf)
    theta = g - target
    scale = 1.0 + float(np.max(np.abs(target))) + float(np.max(np.abs(g)))
    lb = omega.free_lower_bounds
    at_lb = pf <= lb * (1 + 1e-9) + 1e-15
    res = omega.violation(p)

    def block(rows):
        # the block multiplier is read off the unclamped coordinates
        inner = theta[rows & ~at_lb]
        if inner.size == 0:
            return np.nan, 0.0
        lam = 0.5 * (float(inner.max()) + float(inner.min()))
        r = (float(inner.max()) - float(inner.min())) / (2 * scale)
        clamped = theta[rows & at_lb]
        if clamped.size:
            # at a lower bound the coordinate must want to go lower still
            r = max(r, float(np.max(lam - clamped)) / scale)
        return lam, r

    lam_rest, r = block(omega.free_rest_mask)
    res = max(res, r)
    for mask, (rows, m) in zip(omega.free_group_masks, omega.free_groups):
        lam_g, r = block(mask)
        res = max(res, r)
        if np.isnan(lam_g) or np.isnan(lam_rest):
            continue
        nu = (lam_g - lam_rest) / scale
        tight = pf[rows].sum() <= m + 1e-9
        # group multiplier must be nonnegative, and zero when slack
        res = max(res, -nu if tight else abs(nu))
    return max(res, 0.0)


# --- public solver entry points --------------------------------------------


def omd_step(reg: RegularizerSpec, p_t, loss, omega: DecisionSet, check: bool = True) -> np.ndarray:
    """One OMD update ``argmin_{p in Omega} <p, loss> + D_psi(p, p_t)``.

    Parameters
    ----------
    reg : RegularizerSpec
    p_t : ndarray
        Current iterate; must be strictly positive on the free coordinates.
    loss : ndarray
        Finite loss (or loss estimate) vector. Entries above ``1e12`` are
        treated as estimator blow-ups and rejected.
    omega : DecisionSet
    check : bool
        Verify the KKT residual (``<= 1e-8``) before returning.

    Returns
    -------
    ndarray
        The new iterate, exactly zero on ``omega.zero_set``.
    """
    p_t = np.asarray(p_t, dtype=float)
    loss = np.asarray(loss, dtype=float)
    if p_t.shape != (omega.dim,) or loss.shape != (omega.dim,) or reg.dim != omega.dim:
        raise ValueError("dimension mismatch between iterate, loss, regularizer and decision set")
    free = omega.free
    lf = loss[free]
    if not np.all(np.isfinite(lf)):
        raise ValueError("loss must be finite")
    if np.any(np.abs(lf) > LOSS_SENTINEL):
        raise SolverError(f"loss entry {np.max(np.abs(lf)):.3g} exceeds the estimator sentinel")
    pf = p_t[free]
    if np.any(pf <= 0):
        raise ValueError("p_t must be strictly positive on free coordinates")
    a, b = reg.entropy[free], reg.barrier[free]
    y = _grad(a, b, pf) - lf
    p = _solve(reg, omega, y)
    if check:
        r = kkt_residual(reg, omega, y, p)
        if not r <= KKT_TOL:
            raise SolverError(f"KKT residual {r:.3g} exceeds {KKT_TOL:g}")
    return p


def bregman_projection(reg: RegularizerSpec, q, omega: DecisionSet) -> np.ndarray:
    """``argmin_{p in Omega} D_psi(p, q)``; identity when ``q`` is already feasible."""
    return omd_step(reg, q, np.zeros(omega.dim), omega)


def init_point(reg: RegularizerSpec, omega: DecisionSet) -> np.ndarray:
    """Minimiser of ``psi`` over ``omega`` (the dual target is zero)."""
    y = np.zeros(omega.free.size)
    p = _solve(reg, omega, y)
    r = kkt_residual(reg, omega, y, p)
    if not r <= KKT_TOL:
        raise SolverError(f"KKT residual {r:.3g} exceeds {KKT_TOL:g}")
    return p


def omd_objective(reg: RegularizerSpec, p, p_t, loss) -> float:
    return float(np.dot(p, loss)) + bregman(reg, p, p_t)
