"""Limited-memory quasi-Newton descent with Armijo backtracking.

``fun(x)`` returns ``(f, g)`` or ``None`` when ``x`` lies outside the domain
(for the transport problems: some density left the positive definite cone).
Infeasible trial points are treated like failed Armijo tests, so the iterate
never leaves the domain.

An optional preconditioner replaces the scalar initial Hessian of the
two-loop recursion. For the transport problems it is the Hessian of the
path action with the midpoint densities frozen, refreshed every few steps.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    converged: bool
    decrement: float


def lbfgs(fun, x0, *, project=None, precond=None, refresh=5, max_iter=5000, rtol=1e-12,
          atol=0.0, memory=20, c1=1e-4, max_backtrack=60) -> DescentResult:
    """Minimize a smooth convex ``fun`` starting from the feasible point ``x0``.

    Stops when the quasi-Newton decrement ``-g.d`` falls below
    ``rtol * |f| + atol`` or the gradient vanishes. ``atol`` should sit at the
    roundoff level of ``f`` so that problems with a zero minimum terminate. ``project`` maps a
    gradient onto the tangent space of an affine constraint set.
    ``precond(x)`` returns a callable applying an inverse Hessian estimate.
    """
    proj = project or (lambda v: v)
    x = np.array(x0, dtype=float)
    out = fun(x)
    if out is None:
        raise ValueError("initial point is outside the domain")
    f, g = out
    g = proj(g)
    hist: deque = deque(maxlen=memory)
    dec = np.inf
    h0 = None
    for it in range(max_iter):
        if not np.any(g):
            return DescentResult(x, f, g, it, True, 0.0)
        if precond is not None and it % refresh == 0:
            h0 = precond(x)
        d = proj(_two_loop(g, hist, h0))
        slope = float(g @ d)
        if slope >= 0:
            hist.clear()
            d = proj(-h0(g)) if h0 is not None else -g
            slope = float(g @ d)
            if slope >= 0:
                d, slope = -g, -float(g @ g)
        dec = -slope
        if dec <= rtol * abs(f) + atol:
            return DescentResult(x, f, g, it, True, dec)
        t = 1.0
        for _ in range(max_backtrack):
            xn = x + t * d
            res = fun(xn)
            # strict decrease guards against Armijo passing on rounding alone
            if res is not None and res[0] <= f + c1 * t * slope and res[0] < f:
                break
            t *= 0.5
        else:
            # no progress possible at working precision
            return DescentResult(x, f, g, it, dec <= 1e3 * (rtol * abs(f) + atol), dec)
        fn, gn = res
        gn = proj(gn)
        s, y = xn - x, gn - g
        sy = float(s @ y)
        if sy > 1e-16 * float(np.sqrt((s @ s) * (y @ y))):
            hist.append((s, y, 1.0 / sy))
        x, f, g = xn, fn, gn
    return DescentResult(x, f, g, max_iter, False, dec)


def polish(fun, result: DescentResult, precond, *, project=None, max_steps=20
           ) -> DescentResult:
    """Refine a minimizer with preconditioned gradient steps.

    The Armijo test compares objective values, so it stalls once the
    decrement reaches the rounding level of ``f``, leaving a gradient of order
    ``sqrt(eps)``. Here a step is kept whenever it shrinks the gradient in the
    preconditioned norm, which is resolvable far below that level.
    """
    proj = project or (lambda v: v)
    x, f, g = result.x, result.f, result.g
    h = precond(x)
    gnorm = float(g @ h(g))
    for _ in range(max_steps):
        if gnorm <= 0:
            break
        xn = x - proj(h(g))
        res = fun(xn)
        if res is None:
            break
        gn = proj(res[1])
        hn = precond(xn)
        nn = float(gn @ hn(gn))
        if not nn < 0.5 * gnorm:
            break
        x, f, g, h, gnorm = xn, res[0], gn, hn, nn
    return DescentResult(x, f, g, result.iterations, result.converged, gnorm)


def _two_loop(g, hist, h0=None):
    q = -g.copy()
    alphas = []
    for s, y, r in reversed(hist):
        a = r * (s @ q)
        alphas.append(a)
        q -= a * y
    if h0 is not None:
        q = h0(q)
    elif hist:
        s, y, _ = hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, r), a in zip(hist, reversed(alphas)):
        b = r * (y @ q)
        q += (a - b) * s
    return q


def block_tridiagonal_solver(diag, off):
    """Factor a symmetric positive definite block-tridiagonal matrix.

    ``diag`` has shape ``(J, P, P)``; ``off[j]`` is the block at ``(j, j+1)``.
    Returns a callable solving ``H x = b`` for flat ``b`` of length ``J P``.
    """
    J, P, _ = diag.shape
    u = 2 * P - 1
    size = J * P
    ab = np.zeros((u + 1, size))
    rows, cols = np.triu_indices(P)
    for j in range(J):
        o = j * P
        ab[u + rows - cols, o + cols] = diag[j][rows, cols]
    r2, c2 = np.indices((P, P))
    for j in range(J - 1):
        o = j * P
        ab[u + (o + r2) - (o + P + c2), o + P + c2] = off[j]
    factor = cholesky_banded(ab, lower=False)
    return lambda b: cho_solve_banded((factor, False), b)
