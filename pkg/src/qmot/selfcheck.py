"""Randomized invariant suites for the operators and the local metric.

Used by the ``ops-check`` command; each report is a plain dict of maxima
over the random trials so it can be printed as JSON.
"""

from __future__ import annotations

import numpy as np

from .geometry import (MetricMode, Mode, bures_identity_check, local_inner,
                       metric_operator_apply, metric_solve)
from .hermitian import frob, random_hermitian, random_pd, random_skew, real_inner
from .lindblad import (LindbladBasis, check_null_space, div_L, grad_L, laplacian_L,
                       lindblad_diffusion)

ADJ_TOL = 1e-10
OP_TOL = 1e-12
METRIC_TOL = 1e-8


def operator_report(B: LindbladBasis, trials: int = 100, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n = B.n
    adj = lap = lind = 0.0
    for _ in range(trials):
        x = random_hermitian(rng, n)
        y = np.stack([random_skew(rng, n) for _ in range(B.count)])
        adj = max(adj, abs(real_inner(grad_L(B, x), y) - real_inner(x, div_L(B, y))))
        lap_x = laplacian_L(B, x)
        scale = max(1.0, frob(lap_x))
        lap = max(lap, frob(lap_x + div_L(B, grad_L(B, x))) / scale)
        lind = max(lind, frob(lap_x - 2 * lindblad_diffusion(B, x)) / scale)
    ns = check_null_space(B)
    return {
        "n": n,
        "count": B.count,
        "trials": trials,
        "adjointness_max": adj,
        "laplacian_max": lap,
        "lindblad_identity_max": lind,
        "null_space_rank": ns.rank,
        "expected_rank": n * n - 1,
        "passed": bool(adj <= ADJ_TOL and lap <= OP_TOL and lind <= OP_TOL
                       and ns.identity_in_null),
    }


def metric_report(B: LindbladBasis, trials: int = 20, seed: int = 0, alpha: float = 1.0) -> dict:
    """Round trip of the metric solve, symmetry and positivity of the inner product."""
    rng = np.random.default_rng(seed)
    n = B.n
    out = {}
    ok = True
    for kind in (Mode.WFS, Mode.WF):
        mode = MetricMode(kind, alpha)
        trip = sym = 0.0
        pos = np.inf
        for _ in range(trials):
            rho = random_pd(rng, n)
            d1, d2 = random_hermitian(rng, n), random_hermitian(rng, n)
            lam = metric_solve(rho, d1, mode, B)
            trip = max(trip, frob(metric_operator_apply(rho, lam, mode, B) - d1) / frob(d1))
            a, b = local_inner(rho, d1, d2, mode, B), local_inner(rho, d2, d1, mode, B)
            sym = max(sym, abs(a - b) / max(1.0, abs(a)))
            pos = min(pos, local_inner(rho, d1, d1, mode, B))
        good = trip <= METRIC_TOL and sym <= METRIC_TOL and pos > 0
        ok &= good
        out[kind.value] = {"solve_roundtrip_max": trip, "symmetry_max": sym,
                           "min_norm_sq": pos, "passed": bool(good)}
    bures = 0.0
    for _ in range(trials):
        lhs, rhs = bures_identity_check(random_pd(rng, n), random_hermitian(rng, n))
        bures = max(bures, abs(lhs - rhs))
    ok &= bures <= 1e-10
    out["bures_identity_max"] = bures
    out["trials"] = trials
    out["passed"] = bool(ok)
    return out
