"""Reconstruction solvers: ADMM for l1 PA regularization, and SIRT.

The regularized problem is

    min_f  lam/2 ||W f - b||^2 + ||T_k f||_1      (optionally f >= 0)

solved by splitting ``u = T_k f`` with scaled multiplier ``y``:

    u <- shrink(T f + y/beta, 1/beta)
    f <- approx argmin lam/2 ||W f - b||^2 + beta/2 ||T f - u + y/beta||^2
    y <- y + beta (T f - u)

The f-step runs a few projected gradient iterations with a
Barzilai-Borwein step and an exact line search along the projected
direction, so each inner step costs one forward and one adjoint
projection.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .pa_transform import PATransform

logger = logging.getLogger(__name__)


def select_lambda(k, lambda1):
    """Fidelity weight for order ``k`` given the TV-calibrated ``lambda1``: ``2**(k-1) * lambda1``."""
    if not lambda1 > 0:
        raise ValueError(f"lambda1 must be positive, got {lambda1}")
    if int(k) != k or k < 0:
        raise ValueError(f"order must be a non-negative integer, got {k}")
    return float(2.0 ** (int(k) - 1) * lambda1)


def shrink(v, tau):
    """Soft threshold: ``sign(v) * max(|v| - tau, 0)``."""
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    order: int = 1
    lambda1: float = 70.0
    beta: float = 32.0
    max_outer: int = 100
    max_inner: int = 10
    tol: float = 1e-4
    nonneg: bool = True
    seed: int = 0
    # explicit fidelity weight; overrides the 2**(k-1) * lambda1 rule
    lam: float = None

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise ValueError("order must be a non-negative integer")
        for name in ("lambda1", "beta", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration counts must be >= 1")

    @property
    def effective_lambda(self):
        if self.lam is not None:
            return float(self.lam)
        return select_lambda(self.order, self.lambda1)

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class ReconstructionResult:
    image: np.ndarray
    objective_trace: list = field(default_factory=list)
    primal_residual_trace: list = field(default_factory=list)
    data_residual_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    method: str = "admm"
    order: int = None
    lam: float = None

    def trace_rows(self):
        """Per-iteration rows ``(iteration, objective, primal_residual, data_residual)``."""
        return [
            (i + 1, o, p, d)
            for i, (o, p, d) in enumerate(zip(self.objective_trace,
                                              self.primal_residual_trace,
                                              self.data_residual_trace))
        ]


def objective(op, b, t, lam, f):
    """``lam/2 ||W f - b||^2 + ||T f||_1``."""
    r = op.apply(f) - b
    return 0.5 * lam * float(np.vdot(r, r)) + float(np.abs(t.apply(f)).sum())


def _check_finite(b):
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("data contain non-finite values")
    return b


def reconstruct_admm(op, b, t=None, cfg=None, x0=None):
    """Minimize ``lam/2 ||W f - b||^2 + ||T_k f||_1`` by ADMM.

    Parameters
    ----------
    op : LinearOperator
        Forward operator, expected to be rescaled to unit spectral norm.
    b : ndarray
        Data in the operator's range shape.
    t : PATransform, optional
        Regularizing transform; defaults to the 2-D transform of ``cfg.order``.
    cfg : SolverConfig, optional
    x0 : ndarray, optional
        Starting image; defaults to the back-projection ``W^T b``.

    Returns
    -------
    ReconstructionResult
        ``converged`` is False when ``max_outer`` was reached before the
        relative change fell below ``tol``.
    """
    cfg = cfg or SolverConfig()
    t = t if t is not None else PATransform(cfg.order)
    b = _check_finite(b)
    lam = cfg.effective_lambda
    beta = cfg.beta

    def project(x):
        return np.maximum(x, 0.0) if cfg.nonneg else x

    f = project(op.apply_adjoint(b) if x0 is None else np.array(x0, dtype=np.float64))
    wf = op.apply(f)
    tf = t.apply(f)
    u = tf.copy()
    y = np.zeros_like(tf)
    # conservative first step from ||W|| = 1 and ||T||_2^2 <= ndim * 4**k
    tnorm2 = t.ndim * 4.0 ** t.order
    alpha = 1.0 / (lam + beta * tnorm2)

    result = ReconstructionResult(image=f, method="admm", order=t.order, lam=lam)
    for outer in range(cfg.max_outer):
        f_prev = f.copy()
        u = shrink(tf + y / beta, 1.0 / beta)
        v = u - y / beta

        if outer % 10 == 0:
            # refresh incrementally updated quantities against drift
            wf = op.apply(f)
            tf = t.apply(f)
        data_grad = op.apply_adjoint(wf - b)
        g = lam * data_grad + beta * t.apply_adjoint(tf - v)

        for _ in range(cfg.max_inner):
            d = project(f - alpha * g) - f
            dd = float(np.vdot(d, d))
            if dd == 0.0:
                break
            wd = op.apply(d)
            td = t.apply(d)
            wtwd = op.apply_adjoint(wd)
            hd = lam * wtwd + beta * t.apply_adjoint(td)
            curv = float(np.vdot(d, hd))
            slope = float(np.vdot(g, d))
            if curv <= 0.0 or slope >= 0.0:
                break
            step = min(1.0, -slope / curv)
            f = f + step * d
            wf += step * wd
            tf += step * td
            g += step * hd
            alpha = dd / curv

        y = y + beta * (tf - u)

        resid = wf - b
        data_res = float(np.linalg.norm(resid))
        result.objective_trace.append(0.5 * lam * data_res ** 2 + float(np.abs(tf).sum()))
        result.primal_residual_trace.append(float(np.linalg.norm(tf - u)))
        result.data_residual_trace.append(data_res)
        result.iterations = outer + 1

        change = float(np.linalg.norm(f - f_prev))
        base = float(np.linalg.norm(f_prev))
        if change == 0.0 or (base > 0 and change / base < cfg.tol):
            result.converged = True
            break

    if cfg.nonneg:
        f = np.maximum(f, 0.0)
    result.image = f
    if not result.converged:
        logger.info("ADMM stopped at max_outer=%d without reaching tol=%g",
                    cfg.max_outer, cfg.tol)
    return result


def reconstruct_sirt(op, b, iters=200, nonneg=True, x0=None):
    """Simultaneous iterative reconstruction ``f <- f + C W^T R (b - W f)``.

    ``R`` and ``C`` hold the inverse row and column sums of the weights;
    rays or pixels with zero sum get zero weight.
    """
    if int(iters) != iters or iters < 1:
        raise ValueError("iters must be a positive integer")
    b = _check_finite(b)
    row_sums = op.apply(np.ones(op.domain_shape))
    col_sums = op.apply_adjoint(np.ones(op.range_shape))
    with np.errstate(divide="ignore"):
        r_inv = np.where(row_sums > 0, 1.0 / row_sums, 0.0)
        c_inv = np.where(col_sums > 0, 1.0 / col_sums, 0.0)

    f = np.zeros(op.domain_shape) if x0 is None else np.array(x0, dtype=np.float64)
    result = ReconstructionResult(image=f, method="sirt")
    resid = b - op.apply(f)
    for it in range(int(iters)):
        f = f + c_inv * op.apply_adjoint(r_inv * resid)
        if nonneg:
            f = np.maximum(f, 0.0)
        resid = b - op.apply(f)
        data_res = float(np.linalg.norm(resid))
        result.objective_trace.append(0.5 * data_res ** 2)
        result.primal_residual_trace.append(0.0)
        result.data_residual_trace.append(data_res)
        result.iterations = it + 1
    result.image = f
    result.converged = True
    return result
