"""Exact solver for the 2-variable control-revision QP.

    minimize (u - u_o)^T Q (u - u_o)
    s.t.     c_i . u + b_i >= 0            (constraint rows)
             box limits on a and steer

With two variables the optimum is the unconstrained point, the projection
onto one active row, or the intersection of two active rows; enumerating all
O(m^2) candidates and keeping the best feasible one is exact, deterministic,
and faster than an iterative solver at this size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .barrier import ConstraintRow
from .vehicle import ControlInput, ControlLimits

FEAS_TOL = 1e-9
ACTIVE_TOL = 1e-7


@dataclass(frozen=True)
class QpProblem:
    Q: np.ndarray
    u_o: ControlInput
    rows: tuple[ConstraintRow, ...]
    limits: ControlLimits

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=float)
        if q.shape != (2, 2):
            raise ValueError("Q must be 2x2")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(q).min() <= 0.0:
            raise ValueError("Q must be positive definite")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "rows", tuple(self.rows))


@dataclass(frozen=True)
class QpSolution:
    u: ControlInput | None
    active_set: tuple[str, ...]
    status: str  # "optimal" | "infeasible"
    kkt_residual: float
    objective: float


def _limit_rows(limits: ControlLimits) -> list[ConstraintRow]:
    return [
        ConstraintRow(1.0, 0.0, -limits.a_min, "limit:a_min"),
        ConstraintRow(-1.0, 0.0, limits.a_max, "limit:a_max"),
        ConstraintRow(0.0, 1.0, -limits.steer_min, "limit:steer_min"),
        ConstraintRow(0.0, -1.0, limits.steer_max, "limit:steer_max"),
    ]


def _assemble(p: QpProblem) -> tuple[np.ndarray, np.ndarray, list[str]]:
    rows = list(p.rows) + _limit_rows(p.limits)
    C = np.array([[r.c_a, r.c_steer] for r in rows])
    b = np.array([r.b for r in rows])
    return C, b, [r.tag for r in rows]


def solve(p: QpProblem) -> QpSolution:
    """Exact optimum by candidate enumeration; deterministic lexicographic tie-break."""
    C, b, tags = _assemble(p)
    m = len(b)
    u_o = np.array([p.u_o.a, p.u_o.steer])
    q_inv = np.linalg.inv(p.Q)

    candidates = [u_o]
    # projection onto each row treated as an equality (in the Q metric)
    qc = C @ q_inv.T                     # rows of Q^{-1} c_i
    denom = np.einsum("ij,ij->i", C, qc)
    slack_o = C @ u_o + b
    ok = denom > 1e-300
    proj = u_o[None, :] - (slack_o / np.where(ok, denom, 1.0))[:, None] * qc
    candidates.append(proj[ok])
    # pairwise intersections
    ii, jj = np.triu_indices(m, k=1)
    det = C[ii, 0] * C[jj, 1] - C[ii, 1] * C[jj, 0]
    scale = np.hypot(C[ii, 0], C[ii, 1]) * np.hypot(C[jj, 0], C[jj, 1])
    good = np.abs(det) > 1e-14 * np.maximum(scale, 1e-300)
    ii, jj, det = ii[good], jj[good], det[good]
    ux = (-b[ii] * C[jj, 1] + b[jj] * C[ii, 1]) / det
    uy = (-b[jj] * C[ii, 0] + b[ii] * C[jj, 0]) / det
    candidates.append(np.stack([ux, uy], axis=1))

    cand = np.vstack([np.atleast_2d(c) for c in candidates])
    feas = np.all(C @ cand.T + b[:, None] >= -FEAS_TOL, axis=0)
    if not np.any(feas):
        return QpSolution(u=None, active_set=(), status="infeasible",
                          kkt_residual=math.inf, objective=math.inf)

    cand = cand[feas]
    diff = cand - u_o
    obj = np.einsum("ij,jk,ik->i", diff, p.Q, diff)
    best = float(obj.min())
    near = np.flatnonzero(obj <= best + 1e-12 * max(1.0, best))
    order = near[np.lexsort((cand[near, 1], cand[near, 0]))]
    u = cand[order[0]]

    slack = C @ u + b
    active = tuple(tags[i] for i in np.flatnonzero(np.abs(slack) <= ACTIVE_TOL))
    sol_u = ControlInput(float(u[0]), float(u[1]))
    residual = kkt_check(p, sol_u)
    d = u - u_o
    return QpSolution(u=sol_u, active_set=active, status="optimal",
                      kkt_residual=residual, objective=float(d @ p.Q @ d))


def kkt_check(p: QpProblem, u: ControlInput) -> float:
    """Stationarity residual at a feasible point.

    Finds min-norm nonnegative multipliers on the active rows reconstructing
    the objective gradient; returns the reconstruction error norm. In two
    variables the projection onto the multiplier cone is attained on a face
    spanned by at most two rows, so subsets of size <= 2 are exhaustive.
    """
    C, b, _ = _assemble(p)
    uv = np.array([u.a, u.steer])
    grad = 2.0 * p.Q @ (uv - np.array([p.u_o.a, p.u_o.steer]))
    active = np.flatnonzero(np.abs(C @ uv + b) <= ACTIVE_TOL)
    best = float(np.linalg.norm(grad))
    for k in (1, 2):
        for subset in itertools.combinations(active.tolist(), k):
            A = C[list(subset)].T  # 2 x k
            lam, *_ = np.linalg.lstsq(A, grad, rcond=None)
            if np.any(lam < -1e-12):
                continue
            res = float(np.linalg.norm(A @ np.maximum(lam, 0.0) - grad))
            best = min(best, res)
    return best
