"""Local Riemannian structure of the unbalanced transport distances at a point.

At a positive definite ``rho`` a tangent vector ``delta`` is represented by
a Hermitian potential ``lam`` through the metric operator

    WFS:      delta = -1/2 div(rho grad lam + grad lam rho) - (rho lam + lam rho)/(2 alpha)
    WF:       delta = -1/2 div(rho grad lam + grad lam rho) - lam/alpha
    BALANCED: delta = -1/2 div(rho grad lam + grad lam rho)
    FR:       delta = -(rho lam + lam rho)/(2 alpha)
    FROB:     delta = -lam/alpha

and the squared length of ``delta`` is ``-<lam, delta>``. The optimal
velocity and source are ``v = -grad lam`` and ``r = -lam/alpha`` (relative
sources, WFS/FR) or ``s = -lam/alpha`` (absolute sources, WF/FROB).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionError, TraceMismatchError
from .hermitian import (EPS_PD, check_pd, dagger, hermitian_basis, hermitian_part, hmat,
                        hvec, sylvester_solve)
from .lindblad import LindbladBasis, div_L, grad_L

TRACE_TOL = 1e-9


class Mode(str, Enum):
    WFS = "wfs"
    WF = "wf"
    BALANCED = "balanced"
    FR = "fr"
    FROB = "frob"

    @property
    def transport(self) -> bool:
        return self in (Mode.WFS, Mode.WF, Mode.BALANCED)

    @property
    def source(self) -> str | None:
        """``'relative'`` (cost alpha tr(rho r^2)), ``'absolute'`` (alpha tr(s^2)) or None."""
        if self in (Mode.WFS, Mode.FR):
            return "relative"
        if self in (Mode.WF, Mode.FROB):
            return "absolute"
        return None


@dataclass(frozen=True)
class MetricMode:
    kind: Mode = Mode.WFS
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Mode(self.kind))
        if self.kind is not Mode.BALANCED and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


def _mode(mode) -> MetricMode:
    if isinstance(mode, MetricMode):
        return mode
    return MetricMode(Mode(mode))


def metric_operator_apply(rho, lam, mode: MetricMode, B: LindbladBasis) -> np.ndarray:
    """Map a potential ``lam`` to the tangent vector it generates at ``rho``."""
    mode = _mode(mode)
    check_pd(rho, EPS_PD)
    rho = hermitian_part(rho)
    lam = hermitian_part(lam)
    out = np.zeros(np.broadcast_shapes(rho.shape, lam.shape), complex)
    if mode.kind.transport:
        g = grad_L(B, lam)
        r = rho[..., None, :, :]
        out = out - 0.5 * div_L(B, r @ g + g @ r)
    src = mode.kind.source
    if src == "relative":
        out = out - (rho @ lam + lam @ rho) / (2 * mode.alpha)
    elif src == "absolute":
        out = out - lam / mode.alpha
    return hermitian_part(out)


def metric_matrix(rho, mode: MetricMode, B: LindbladBasis) -> np.ndarray:
    """Metric operator as a real ``(n^2, n^2)`` matrix in Hermitian coordinates.

    Batched over leading axes of ``rho``. Symmetric and negative definite for
    the unbalanced modes; in BALANCED mode its null space is ``span(I)``.
    """
    rho = hermitian_part(rho)
    basis = hermitian_basis(rho.shape[-1])
    cols = metric_operator_apply(rho[..., None, :, :], basis, mode, B)   # (..., n^2, n, n)
    return np.swapaxes(hvec(cols), -1, -2)


def metric_solve(rho, delta, mode: MetricMode, B: LindbladBasis) -> np.ndarray:
    """Potential ``lam`` with ``metric_operator_apply(rho, lam) = delta``.

    In BALANCED mode ``delta`` must be trace-free and the returned ``lam`` is
    normalized to zero trace.
    """
    mode = _mode(mode)
    check_pd(rho, EPS_PD)
    rho = hermitian_part(rho)
    delta = hermitian_part(delta)
    if delta.shape[-1] != rho.shape[-1]:
        raise DimensionError("rho and delta differ in dimension")
    n = rho.shape[-1]
    A = -metric_matrix(rho, mode, B)
    b = -hvec(delta)
    if mode.kind is Mode.BALANCED:
        tr = np.trace(delta, axis1=-2, axis2=-1).real
        if np.max(np.abs(tr)) > TRACE_TOL:
            raise TraceMismatchError(
                "balanced mode needs a trace-free tangent vector",
                trace=float(np.max(np.abs(tr))))
        e = hvec(np.eye(n)) / np.sqrt(n)
        A = A + np.outer(e, e)
    x = np.linalg.solve(A, b[..., None])[..., 0]
    return hmat(x)


def _transport_pairing(rho, g1, g2) -> float:
    # 1/2 tr(rho g1^H g2 + rho g2^H g1), summed over the stack
    m = np.einsum("ij,kjl,kli->", rho, dagger(g1), g2)
    return float(m.real)


def local_inner(rho, d1, d2, mode: MetricMode, B: LindbladBasis) -> float:
    """Riemannian inner product of two tangent vectors at ``rho``."""
    mode = _mode(mode)
    rho = hermitian_part(rho)
    l1 = metric_solve(rho, d1, mode, B)
    l2 = metric_solve(rho, d2, mode, B)
    val = 0.0
    if mode.kind.transport:
        val += _transport_pairing(rho, grad_L(B, l1), grad_L(B, l2))
    src = mode.kind.source
    if src == "relative":
        val += np.trace(rho @ l1 @ l2 + rho @ l2 @ l1).real / (2 * mode.alpha)
    elif src == "absolute":
        val += np.trace(l1 @ l2).real / mode.alpha
    return float(val)


def optimal_controls(rho, lam, mode: MetricMode, B: LindbladBasis):
    """Velocity ``v`` (skew stack) and source (``r`` or ``s``) generated by ``lam``.

    Returns ``(v, source)``; either is None when the mode has no such term.
    """
    mode = _mode(mode)
    lam = hermitian_part(lam)
    v = -grad_L(B, lam) if mode.kind.transport else None
    src = None
    if mode.kind.source is not None:
        src = -lam / mode.alpha
    return v, src


def tangent_of(rho, v, source, mode: MetricMode, B: LindbladBasis) -> np.ndarray:
    """Tangent vector produced by a velocity ``v`` and source at ``rho``."""
    mode = _mode(mode)
    rho = hermitian_part(rho)
    out = np.zeros_like(rho)
    if mode.kind.transport and v is not None:
        out = out + 0.5 * div_L(B, rho @ v + v @ rho)
    if mode.kind.source == "relative" and source is not None:
        out = out + 0.5 * (rho @ source + source @ rho)
    elif mode.kind.source == "absolute" and source is not None:
        out = out + source
    return hermitian_part(out)


def control_cost(rho, v, source, mode: MetricMode) -> float:
    """``tr(rho v^H v) + alpha tr(rho r^2)`` or ``... + alpha tr(s^2)``."""
    mode = _mode(mode)
    val = 0.0
    if mode.kind.transport and v is not None:
        val += np.einsum("ij,kjl,kli->", rho, dagger(v), v).real
    if source is not None:
        if mode.kind.source == "relative":
            val += mode.alpha * np.trace(rho @ source @ source).real
        elif mode.kind.source == "absolute":
            val += mode.alpha * np.trace(source @ source).real
    return float(val)


def fisher_rao_tangent_cost(rho, delta) -> float:
    """``min tr(rho r^2)`` over Hermitian ``r`` with ``(rho r + r rho)/2 = delta``."""
    r = sylvester_solve(rho, 2 * hermitian_part(delta))
    return float(np.trace(hermitian_part(rho) @ r @ r).real)


def bures_identity_check(rho, delta) -> tuple[float, float]:
    """``(tr(G delta)/2, tr(rho G^2))`` for the Sylvester solution ``rho G + G rho = delta``."""
    delta = hermitian_part(delta)
    G = sylvester_solve(rho, delta)
    lhs = 0.5 * np.trace(G @ delta).real
    rhs = np.trace(hermitian_part(rho) @ G @ G).real
    return float(lhs), float(rhs)
