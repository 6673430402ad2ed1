r"""Spectral theory of the linearized boundary operator around two discs.

Linearizing the contour functional at the disc pair (b1, b2) turns it into
a Fourier multiplier: cosine mode n is mapped through the 2x2 matrix

    M_n(Omega) = [[Omega + A_n/(d+1),      gamma_n/(d+1)],
                  [d*gamma_n/(d+1),  Omega + B_n/(d+1)]],     d = delta,

with

    A_n = (d+1) V + d/(2n) + I_n(b1 mu) K_n(b1 mu)
    B_n = (d+1) W + 1/(2n) + d I_n(b2 mu) K_n(b2 mu)
    gamma_n = b^n/(2n) - I_n(b2 mu) K_n(b1 mu),          b = b2/b1,

and the mean-flow coefficients V, W built from I_1, K_1.  M_n is singular
exactly at the two angular velocities

    Omega_n^+- = ( -(A_n+B_n) +- sqrt((A_n-B_n)^2 + 4 d gamma_n^2) )
                 / (2 (d+1)),

which are the bifurcation points of the m-fold V-state branches.  This
module computes all of these quantities, the kernel direction of the
singular matrix, the trace form of the transversality condition, and scans
for spectral collisions Omega_m^- = Omega_n^+ as b2 varies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_ik_product
from .kernels import LayerParams


@dataclass(frozen=True)
class MeanFlowCoeffs:
    v: float
    w: float


@dataclass(frozen=True)
class SpectrumRow:
    n: int
    a_n: float
    b_n: float
    gamma_n: float
    omega_minus: float
    omega_plus: float


@dataclass(frozen=True)
class CollisionRecord:
    m: int
    n: int
    b2_root: float
    residual: float
    tangency: bool = False


def mean_flow_coeffs(params: LayerParams) -> MeanFlowCoeffs:
    """Angular mean-flow coefficients (V, W); both equal -1/2 at b1 = b2."""
    d, mu, b1, b2, b = params.delta, params.mu, params.b1, params.b2, params.b
    i1k1_b1 = bessel_ik_product(1, b1 * mu, b1 * mu)
    i1k1_b2 = bessel_ik_product(1, b2 * mu, b2 * mu)
    i1b2_k1b1 = bessel_ik_product(1, b2 * mu, b1 * mu)
    v = -(d + b * b) / (2.0 * (1.0 + d)) - (i1k1_b1 - b * i1b2_k1b1) / (1.0 + d)
    w = -0.5 - d * (i1k1_b2 - i1b2_k1b1 / b) / (1.0 + d)
    return MeanFlowCoeffs(v, w)


def coeffs_ab(params: LayerParams, n: int) -> tuple[float, float]:
    """(A_n, B_n); both sequences are non-positive and non-increasing."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    d, mu, b1, b2 = params.delta, params.mu, params.b1, params.b2
    mf = mean_flow_coeffs(params)
    a_n = (d + 1.0) * mf.v + d / (2.0 * n) + bessel_ik_product(n, b1 * mu, b1 * mu)
    b_n = (d + 1.0) * mf.w + 1.0 / (2.0 * n) + d * bessel_ik_product(n, b2 * mu, b2 * mu)
    return a_n, b_n


def coeffs_ab_limits(params: LayerParams) -> tuple[float, float]:
    """(A_inf, B_inf) = (d+1) (V, W), the large-n limits of A_n, B_n."""
    d = params.delta
    mf = mean_flow_coeffs(params)
    return (d + 1.0) * mf.v, (d + 1.0) * mf.w


def a_inf_minus_b_inf(params: LayerParams) -> float:
    """Branch-limit gap A_inf - B_inf in closed form.

    Zero exactly at b1 = b2 and strictly positive for b2 < b1 once
    delta >= (b2/b1)^2; this gap is what separates the two eigenvalue
    branches at large mode index.
    """
    d, mu, b1, b2, b = params.delta, params.mu, params.b1, params.b2, params.b
    i1k1_b1 = bessel_ik_product(1, b1 * mu, b1 * mu)
    i1k1_b2 = bessel_ik_product(1, b2 * mu, b2 * mu)
    i1b2_k1b1 = bessel_ik_product(1, b2 * mu, b1 * mu)
    return (
        (1.0 - b * b) / 2.0
        - i1k1_b1
        + d * i1k1_b2
        + (b * b - d) / b * i1b2_k1b1
    )


def gamma_n(params: LayerParams, n: int) -> float:
    """Coupling coefficient gamma_n = b^n/(2n) - I_n(b2 mu) K_n(b1 mu)."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    return params.b ** n / (2.0 * n) - bessel_ik_product(
        n, params.b2 * params.mu, params.b1 * params.mu
    )


def matrix_m(params: LayerParams, n: int, omega: float) -> np.ndarray:
    """The 2x2 multiplier block M_n(omega) acting on mode-n coefficients."""
    d = params.delta
    a_n, b_n = coeffs_ab(params, n)
    g = gamma_n(params, n)
    return np.array(
        [
            [omega + a_n / (d + 1.0), g / (d + 1.0)],
            [d * g / (d + 1.0), omega + b_n / (d + 1.0)],
        ]
    )


def omega_pm(params: LayerParams, n: int) -> tuple[float, float]:
    """Angular velocities (omega_minus, omega_plus) where M_n is singular."""
    d = params.delta
    a_n, b_n = coeffs_ab(params, n)
    g = gamma_n(params, n)
    disc = np.sqrt((a_n - b_n) ** 2 + 4.0 * d * g * g)
    lo = (-(a_n + b_n) - disc) / (2.0 * (d + 1.0))
    hi = (-(a_n + b_n) + disc) / (2.0 * (d + 1.0))
    return lo, hi


def kernel_vector(params: LayerParams, m: int, sign: int) -> np.ndarray:
    """Generator of ker M_m(Omega_m^sign), sign in {+1, -1}.

    Components (Omega_m^sign + B_m/(d+1), -d*gamma_m/(d+1)), with the
    overall sign flipped if needed so the first component is positive.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = params.delta
    _, b_m = coeffs_ab(params, m)
    g = gamma_n(params, m)
    lo, hi = omega_pm(params, m)
    omega = hi if sign == 1 else lo
    vec = np.array([omega + b_m / (d + 1.0), -d * g / (d + 1.0)])
    if vec[0] == 0.0 and vec[1] == 0.0:
        raise ArithmeticError(
            "kernel direction degenerate (gamma_m = 0 and Omega = -B_m/(d+1))"
        )
    if vec[0] < 0.0 or (vec[0] == 0.0 and vec[1] < 0.0):
        vec = -vec
    return vec


def trace_identity_residual(params: LayerParams, m: int) -> tuple[float, float]:
    """Residuals of Tr M_m(Omega_m^pm) = pm (Omega_m^+ - Omega_m^-).

    The nonvanishing of that trace is the computable transversality
    condition for the bifurcation; returns (res_minus, res_plus).
    """
    lo, hi = omega_pm(params, m)
    gap = hi - lo
    tr_lo = float(np.trace(matrix_m(params, m, lo)))
    tr_hi = float(np.trace(matrix_m(params, m, hi)))
    return abs(tr_lo + gap), abs(tr_hi - gap)


def spectrum_table(params: LayerParams, n_max: int) -> list[SpectrumRow]:
    """Rows (n, A_n, B_n, gamma_n, Omega_n^-, Omega_n^+) for n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = []
    for n in range(1, n_max + 1):
        a_n, b_n = coeffs_ab(params, n)
        g = gamma_n(params, n)
        lo, hi = omega_pm(params, n)
        rows.append(SpectrumRow(n, a_n, b_n, g, lo, hi))
    return rows


# ---------------------------------------------------------------------------
# Collision scanning
# ---------------------------------------------------------------------------


def _omega_gap(params_base: LayerParams, m: int, n: int, b2: float) -> float:
    p = LayerParams(params_base.delta, params_base.lam, params_base.b1, b2)
    return omega_pm(p, m)[0] - omega_pm(p, n)[1]


def collision_scan(
    params_base: LayerParams,
    m: int,
    n_max: int,
    grid: int = 64,
    dedup_tol: float = 1e-9,
) -> list[CollisionRecord]:
    """Locate b2 in (0, b1) where Omega_m^-(b2) = Omega_n^+(b2), n <= n_max.

    Sign changes of the gap on a uniform b2 grid are refined by bisection
    to |Omega_m^- - Omega_n^+| <= 1e-12.  Roots of the same pair closer
    than dedup_tol*b1 are merged and flagged as tangencies.  The b2 value
    carried by params_base is ignored; an empty list is a valid result.
    """
    if m < 1 or grid < 16:
        raise ValueError("need m >= 1 and grid >= 16")
    b1 = params_base.b1
    records: list[CollisionRecord] = []
    ts = np.linspace(0.5 / grid, 1.0 - 0.5 / grid, grid) * b1
    for n in range(1, n_max + 1):
        if n == m:
            continue
        gaps = np.array([_omega_gap(params_base, m, n, t) for t in ts])
        roots: list[tuple[float, float]] = []
        for i in range(grid - 1):
            g0, g1 = gaps[i], gaps[i + 1]
            if g0 == 0.0:
                roots.append((ts[i], 0.0))
                continue
            if g0 * g1 < 0.0:
                lo_t, hi_t, lo_g = ts[i], ts[i + 1], g0
                res = min(abs(g0), abs(g1))
                root = lo_t if abs(g0) <= abs(g1) else hi_t
                for _ in range(200):
                    mid = 0.5 * (lo_t + hi_t)
                    gm = _omega_gap(params_base, m, n, mid)
                    if abs(gm) < res:
                        res, root = abs(gm), mid
                    if res <= 1e-12 or hi_t - lo_t <= 1e-16 * b1:
                        break
                    if lo_g * gm <= 0.0:
                        hi_t = mid
                    else:
                        lo_t, lo_g = mid, gm
                roots.append((root, res))
        merged: list[CollisionRecord] = []
        for root, res in sorted(roots):
            if merged and abs(root - merged[-1].b2_root) <= dedup_tol * b1:
                prev = merged[-1]
                merged[-1] = CollisionRecord(
                    m, n, prev.b2_root, min(prev.residual, res), tangency=True
                )
            else:
                merged.append(CollisionRecord(m, n, root, res))
        records.extend(merged)
    records.sort(key=lambda r: (r.b2_root, r.n))
    return records


def first_collision_free_m(
    params_base: LayerParams, m_start: int = 1, m_stop: int = 32, n_max: int = 48,
    grid: int = 64,
) -> int | None:
    """Smallest m in [m_start, m_stop] whose collision scan comes back empty.

    Empirical stand-in for the threshold index beyond which the two
    eigenvalue branches can no longer cross.
    """
    for m in range(m_start, m_stop + 1):
        if not collision_scan(params_base, m, n_max=n_max, grid=grid):
            return m
    return None


def equal_radius_collision_argument(n: int, tol: float = 1e-12) -> float:
    """Root x0 of I_1(x) K_1(x) = 1/(2n), n >= 2.

    At equal radii b1 = b2 = x0/mu the branches collide: Omega_1^+ equals
    Omega_n^-.  I_1 K_1 decreases from 1/2 to 0, so the root is unique.
    """
    if n < 2:
        raise ValueError("need n >= 2 (I_1 K_1 never exceeds 1/2)")
    target = 1.0 / (2.0 * n)
    lo, hi = 1e-8, 1.0
    while bessel_ik_product(1, hi, hi) > target:
        hi *= 2.0
        if hi > 1e8:
            raise ArithmeticError("failed to bracket the collision argument")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = bessel_ik_product(1, mid, mid) - target
        if abs(val) <= tol:
            return mid
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = "n,a_n,b_n,gamma_n,omega_minus,omega_plus"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def spectrum_rows_to_csv(rows: list[SpectrumRow]) -> str:
    lines = [_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [str(r.n), _fmt(r.a_n), _fmt(r.b_n), _fmt(r.gamma_n),
                 _fmt(r.omega_minus), _fmt(r.omega_plus)]
            )
        )
    return "\n".join(lines) + "\n"


def spectrum_rows_to_json(rows: list[SpectrumRow]) -> str:
    payload = [
        {
            "n": r.n,
            "a_n": float(r.a_n),
            "b_n": float(r.b_n),
            "gamma_n": float(r.gamma_n),
            "omega_minus": float(r.omega_minus),
            "omega_plus": float(r.omega_plus),
        }
        for r in rows
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def collision_records_to_csv(records: list[CollisionRecord]) -> str:
    lines = ["m,n,b2_root,residual,tangency"]
    for r in records:
        lines.append(
            ",".join(
                [str(r.m), str(r.n), _fmt(r.b2_root), _fmt(r.residual),
                 str(int(r.tangency))]
            )
        )
    return "\n".join(lines) + "\n"


def collision_records_to_json(
    records: list[CollisionRecord], params_base: LayerParams
) -> str:
    payload = {
        "schema_version": 1,
        "proven_regime": bool(params_base.in_proven_regime),
        "records": [
            {
                "m": r.m,
                "n": r.n,
                "b2_root": float(r.b2_root),
                "residual": float(r.residual),
                "tangency": bool(r.tangency),
            }
            for r in records
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
