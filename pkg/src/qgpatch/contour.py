r"""Contour dynamics functional and V-state continuation.

Patch boundaries close to the discs are written in polar form
z_k(t) = R_k(t) e^{it} with R_k = sqrt(b_k^2 + 2 r_k(t)).  A pair of
patches rotating rigidly at angular velocity Omega solves F(Omega, r) = 0
where

    F_k(Omega, r)(t) = Omega r_k'(t)
        + sum_j int G_{k,j}(z_k(t) - z_j(e))
                    Im{ conj(z_k'(t)) z_j'(e) } de .

The integrand factor Im{conj(z_k') z_j'} equals
d^2/(dt de) [R_k(t) R_j(e) sin(e - t)], vanishes on the diagonal for
k = j, and keeps the singular quadrature of :mod:`qgpatch.quadrature`
spectrally accurate.

At r = 0 the derivative of F acts diagonally on Fourier modes: cosine mode
n maps to sine mode n through the block -n M_n(Omega) of
:func:`qgpatch.spectrum.matrix_m`.  V-state branches are continued in the
amplitude s of the kernel direction by a damped Newton iteration on the
Galerkin system over the m-fold sine modes, with the first-layer mode-m
coefficient pinned to s * (first kernel-vector component).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from . import spectrum
from .kernels import LayerParams, gkj_coefficients
from .quadrature import kernel_integral_grid

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


class RadiusCollapseError(RuntimeError):
    """A deformation drove b_k^2 + 2 r_k below zero somewhere."""


class CollisionDetectedError(RuntimeError):
    """Bifurcation point degenerate: another mode shares the eigenvalue."""


class NoConvergenceError(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""


@dataclass(frozen=True)
class RadialDeformation:
    """Even m-fold deformation pair: r_k(t) = sum_n c[k, n-1] cos(n m t).

    Evenness and 2 pi / m periodicity hold by construction of the cosine
    basis; the nodal grid has n_nodes equally spaced points.
    """

    m: int
    coeffs: FloatArray  # shape (2, n_modes)
    n_nodes: int = 256

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != 2:
            raise ValueError("coeffs must have shape (2, n_modes)")
        object.__setattr__(self, "coeffs", c)
        if self.m < 1:
            raise ValueError("symmetry fold m must be >= 1")
        if self.n_nodes % 2 or self.n_nodes < 64:
            raise ValueError("n_nodes must be even and >= 64")
        if self.m * c.shape[1] >= self.n_nodes // 2:
            raise ValueError("highest mode must stay below the Nyquist limit")

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    def grid(self) -> FloatArray:
        return TWO_PI * np.arange(self.n_nodes) / self.n_nodes

    def nodal(self) -> FloatArray:
        """r_k sampled on the grid, shape (2, n_nodes)."""
        t = self.grid()
        modes = self.m * np.arange(1, self.n_modes + 1)
        return self.coeffs @ np.cos(np.outer(modes, t))

    def nodal_derivative(self) -> FloatArray:
        """dr_k/dt on the grid, computed in coefficient space."""
        t = self.grid()
        modes = self.m * np.arange(1, self.n_modes + 1)
        return -(self.coeffs * modes) @ np.sin(np.outer(modes, t))

    @staticmethod
    def zero(m: int, n_modes: int, n_nodes: int = 256) -> "RadialDeformation":
        return RadialDeformation(m, np.zeros((2, n_modes)), n_nodes)


def radius_profile(b_k: float, r_nodal: FloatArray) -> FloatArray:
    """R_k = sqrt(b_k^2 + 2 r_k) pointwise; fails on radius collapse."""
    r_nodal = np.asarray(r_nodal, dtype=np.float64)
    squared = b_k * b_k + 2.0 * r_nodal
    if np.any(squared <= 0.0):
        raise RadiusCollapseError(
            f"b_k^2 + 2 min(r) = {float(np.min(squared)):.3e} <= 0"
        )
    return np.sqrt(squared)


def _boundary_curves(
    params: LayerParams, r_nodal: FloatArray, dr_nodal: FloatArray
):
    """Complex nodes z_k and derivatives z_k' for both layers."""
    n = r_nodal.shape[1]
    t = TWO_PI * np.arange(n) / n
    phase = np.exp(1j * t)
    zs, dzs = [], []
    for k in (0, 1):
        radius = radius_profile(params.radius(k + 1), r_nodal[k])
        dradius = dr_nodal[k] / radius
        zs.append(radius * phase)
        dzs.append((dradius + 1j * radius) * phase)
    return zs, dzs


def functional_from_nodal(
    params: LayerParams,
    omega: float,
    r_nodal: FloatArray,
    dr_nodal: FloatArray,
) -> FloatArray:
    """F(Omega, r) on the grid from nodal values of r and dr/dt, shape (2, N)."""
    r_nodal = np.asarray(r_nodal, dtype=np.float64)
    dr_nodal = np.asarray(dr_nodal, dtype=np.float64)
    (z1, z2), (dz1, dz2) = _boundary_curves(params, r_nodal, dr_nodal)
    zs = {1: z1, 2: z2}
    dzs = {1: dz1, 2: dz2}
    out = np.empty_like(r_nodal)
    for k in (1, 2):
        total = omega * dr_nodal[k - 1]
        for j in (1, 2):
            alpha, kappa = gkj_coefficients(params, k, j)
            t_mat = np.imag(np.conj(dzs[k])[:, None] * dzs[j][None, :])
            total = total + kernel_integral_grid(
                alpha, kappa, params.mu, zs[k], zs[j], t_mat, dz_src=dzs[j]
            )
        out[k - 1] = total
    return out


def functional_f(
    params: LayerParams, omega: float, deformation: RadialDeformation
) -> FloatArray:
    """Contour functional F(Omega, r) sampled on the deformation grid."""
    return functional_from_nodal(
        params, omega, deformation.nodal(), deformation.nodal_derivative()
    )


def linearized_multiplier(params: LayerParams, omega: float, n: int) -> np.ndarray:
    """Block -n M_n(Omega): cosine mode n of r maps to sine mode n of F."""
    return -n * spectrum.matrix_m(params, n, omega)


def sine_coefficients(values: FloatArray, modes) -> FloatArray:
    """Coefficients of sin(mode * t) on the uniform grid, for each row."""
    values = np.atleast_2d(values)
    n = values.shape[-1]
    t = TWO_PI * np.arange(n) / n
    modes = np.asarray(modes, dtype=np.int64)
    basis = np.sin(np.outer(modes, t))
    return (2.0 / n) * values @ basis.T


def jacobian_fd(
    params: LayerParams,
    omega: float,
    r0: RadialDeformation | None,
    h: float = 1e-6,
    n_probe: int = 16,
    n_nodes: int = 256,
) -> FloatArray:
    """Central-difference Jacobian of F in the cosine basis, sine projected.

    Probes F along e = cos(n t) in each layer for n = 1..n_probe and
    projects the response on sine modes 1..n_probe.  Returns blocks
    J[np_, n, k, j] = d(sine mode np_ of F_k) / d(cos mode n of layer j).
    At r0 = 0 the diagonal blocks J[n, n] reproduce -n M_n(Omega).
    """
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("finite-difference step outside [1e-8, 1e-4]")
    t = TWO_PI * np.arange(n_nodes) / n_nodes
    if r0 is None:
        base = np.zeros((2, n_nodes))
        dbase = np.zeros((2, n_nodes))
    else:
        if r0.n_nodes != n_nodes:
            r0 = replace(r0, n_nodes=n_nodes)
        base = r0.nodal()
        dbase = r0.nodal_derivative()
    modes = np.arange(1, n_probe + 1)
    jac = np.empty((n_probe, n_probe, 2, 2))
    for j_layer in (0, 1):
        for n in modes:
            bump = np.cos(n * t)
            dbump = -n * np.sin(n * t)
            rp, rm = base.copy(), base.copy()
            drp, drm = dbase.copy(), dbase.copy()
            rp[j_layer] += h * bump
            rm[j_layer] -= h * bump
            drp[j_layer] += h * dbump
            drm[j_layer] -= h * dbump
            fp = functional_from_nodal(params, omega, rp, drp)
            fm = functional_from_nodal(params, omega, rm, drm)
            resp = (fp - fm) / (2.0 * h)
            jac[:, n - 1, :, j_layer] = sine_coefficients(resp, modes).T
    return jac


# ---------------------------------------------------------------------------
# V-state Newton continuation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VStateSolution:
    params: LayerParams
    m: int
    sign: int
    amplitude: float
    omega: float
    deformation: RadialDeformation
    residual_norm: float
    iterations: int = 0

    def boundary_radii(self) -> FloatArray:
        r = self.deformation.nodal()
        return np.vstack(
            [
                radius_profile(self.params.b1, r[0]),
                radius_profile(self.params.b2, r[1]),
            ]
        )

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "params": self.params.as_dict(),
            "m": self.m,
            "sign": self.sign,
            "amplitude": float(self.amplitude),
            "omega": float(self.omega),
            "n_modes": self.deformation.n_modes,
            "n_nodes": self.deformation.n_nodes,
            "coeffs_layer1": [float(c) for c in self.deformation.coeffs[0]],
            "coeffs_layer2": [float(c) for c in self.deformation.coeffs[1]],
            "residual": float(self.residual_norm),
        }

    @staticmethod
    def from_json_dict(payload: dict) -> "VStateSolution":
        p = payload["params"]
        params = LayerParams(p["delta"], p["lambda"], p["b1"], p["b2"])
        deformation = RadialDeformation(
            payload["m"],
            np.vstack([payload["coeffs_layer1"], payload["coeffs_layer2"]]),
            payload["n_nodes"],
        )
        return VStateSolution(
            params,
            payload["m"],
            payload["sign"],
            payload["amplitude"],
            payload["omega"],
            deformation,
            payload["residual"],
        )

    def boundary_csv(self) -> str:
        radii = self.boundary_radii()
        t = self.deformation.grid()
        lines = ["theta,R1,R2,x1,y1,x2,y2"]
        for i in range(t.size):
            row = [
                t[i],
                radii[0, i],
                radii[1, i],
                radii[0, i] * np.cos(t[i]),
                radii[0, i] * np.sin(t[i]),
                radii[1, i] * np.cos(t[i]),
                radii[1, i] * np.sin(t[i]),
            ]
            lines.append(",".join(format(float(v), ".17g") for v in row))
        return "\n".join(lines) + "\n"


def check_simple_eigenvalue(
    params: LayerParams, m: int, sign: int, n_modes: int, tol: float = 1e-9
) -> None:
    """Refuse parameters where Omega_m^sign collides with another m-multiple.

    Kernel simplicity of the linearized operator on the m-fold subspace
    requires Omega_m^sign != Omega_{km}^{-sign} for k >= 2 (same-branch
    equality is excluded by monotonicity).
    """
    lo, hi = spectrum.omega_pm(params, m)
    target = hi if sign == 1 else lo
    for k in range(2, n_modes + 1):
        lo_k, hi_k = spectrum.omega_pm(params, k * m)
        partner = lo_k if sign == 1 else hi_k
        if abs(target - partner) < tol:
            raise CollisionDetectedError(
                f"Omega_{m}^{'+' if sign == 1 else '-'} collides with mode "
                f"{k * m} (gap {abs(target - partner):.2e}); bifurcation not simple"
            )


def _pack(omega: float, coeffs: FloatArray) -> FloatArray:
    return np.concatenate([[omega], coeffs[0, 1:], coeffs[1, :]])


def _unpack(u: FloatArray, n_modes: int, pinned: float) -> tuple[float, FloatArray]:
    omega = float(u[0])
    coeffs = np.empty((2, n_modes))
    coeffs[0, 0] = pinned
    coeffs[0, 1:] = u[1 : n_modes]
    coeffs[1, :] = u[n_modes :]
    return omega, coeffs


def _projected_residual(
    params: LayerParams, omega: float, defo: RadialDeformation
) -> FloatArray:
    modes = defo.m * np.arange(1, defo.n_modes + 1)
    f_vals = functional_f(params, omega, defo)
    return sine_coefficients(f_vals, modes).ravel()


def _newton_matrix(
    params: LayerParams, omega: float, coeffs: FloatArray, m: int
) -> FloatArray:
    """Jacobian of the projected system from the r = 0 multiplier blocks."""
    n_modes = coeffs.shape[1]
    dim = 2 * n_modes
    jac = np.zeros((dim, dim))
    for j in range(1, n_modes + 1):
        block = linearized_multiplier(params, omega, m * j)
        r1, r2 = j - 1, n_modes + j - 1  # rows: layer-1 and layer-2 mode m*j
        # column 0: d/d omega of the projected residual
        jac[r1, 0] = -m * j * coeffs[0, j - 1]
        jac[r2, 0] = -m * j * coeffs[1, j - 1]
        if j >= 2:
            jac[r1, j - 1] = block[0, 0]
            jac[r2, j - 1] = block[1, 0]
        jac[r1, n_modes + j - 1] = block[0, 1]
        jac[r2, n_modes + j - 1] = block[1, 1]
    return jac


def _fd_system_matrix(
    params: LayerParams, u: FloatArray, m: int, n_modes: int, n_nodes: int,
    pinned: float, h: float = 1e-7,
) -> FloatArray:
    dim = u.size
    jac = np.empty((dim, dim))
    for col in range(dim):
        up, um = u.copy(), u.copy()
        up[col] += h
        um[col] -= h
        om_p, c_p = _unpack(up, n_modes, pinned)
        om_m, c_m = _unpack(um, n_modes, pinned)
        fp = _projected_residual(params, om_p, RadialDeformation(m, c_p, n_nodes))
        fm = _projected_residual(params, om_m, RadialDeformation(m, c_m, n_nodes))
        jac[:, col] = (fp - fm) / (2.0 * h)
    return jac


def vstate_solve(
    params: LayerParams,
    m: int,
    sign: int,
    s: float,
    init: VStateSolution | None = None,
    n_modes: int = 32,
    n_nodes: int = 256,
    tol: float = 1e-10,
    max_iter: int = 50,
    s_max: float = 0.1,
) -> VStateSolution:
    """Solve F(Omega, r) = 0 on the m-fold sine modes at fixed amplitude s.

    The amplitude chart pins the first-layer mode-m cosine coefficient to
    s * v1 with v = kernel_vector(params, m, sign); the remaining
    coefficients and Omega are the Newton unknowns.  With no warm start the
    iteration begins on the tangent r = s * v cos(m t), Omega = Omega_m^sign.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if abs(s) > s_max:
        raise ValueError(f"amplitude {s} beyond configured s_max={s_max}")
    if n_modes < 8:
        raise ValueError("need n_modes >= 8")
    check_simple_eigenvalue(params, m, sign, n_modes)

    vec = spectrum.kernel_vector(params, m, sign)
    lo, hi = spectrum.omega_pm(params, m)
    omega0 = hi if sign == 1 else lo
    pinned = s * vec[0]

    if s == 0.0:
        defo = RadialDeformation.zero(m, n_modes, n_nodes)
        return VStateSolution(params, m, sign, 0.0, omega0, defo, 0.0, 0)

    if init is not None:
        coeffs = init.deformation.coeffs.copy()
        if coeffs.shape[1] != n_modes:
            raise ValueError("warm start has a different mode count")
        coeffs[0, 0] = pinned
        omega = init.omega
    else:
        coeffs = np.zeros((2, n_modes))
        coeffs[0, 0] = pinned
        coeffs[1, 0] = s * vec[1]
        omega = omega0

    u = _pack(omega, coeffs)
    defo = RadialDeformation(m, coeffs, n_nodes)
    res = _projected_residual(params, omega, defo)
    res_norm = float(np.max(np.abs(res)))
    step_norm = np.inf
    used_fd = False

    for iteration in range(1, max_iter + 1):
        if res_norm <= tol and step_norm <= 1e-12:
            return VStateSolution(
                params, m, sign, s, omega, defo, res_norm, iteration - 1
            )
        if iteration > 25 and not used_fd:
            jac = _fd_system_matrix(params, u, m, n_modes, n_nodes, pinned)
            used_fd = True
        else:
            jac = _newton_matrix(params, omega, coeffs, m)
        try:
            delta = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(f"singular Newton matrix: {exc}") from exc
        scale = 1.0
        for _ in range(9):
            u_try = u - scale * delta
            omega_try, coeffs_try = _unpack(u_try, n_modes, pinned)
            try:
                defo_try = RadialDeformation(m, coeffs_try, n_nodes)
                res_try = _projected_residual(params, omega_try, defo_try)
            except RadiusCollapseError:
                scale *= 0.5
                continue
            if float(np.max(np.abs(res_try))) < res_norm or res_norm <= tol:
                break
            scale *= 0.5
        else:
            raise NoConvergenceError(
                f"damping failed at residual {res_norm:.3e} (iteration {iteration})"
            )
        step_norm = float(np.max(np.abs(scale * delta)))
        u, omega, coeffs, defo, res = u_try, omega_try, coeffs_try, defo_try, res_try
        res_norm = float(np.max(np.abs(res)))

    if res_norm <= tol:
        return VStateSolution(params, m, sign, s, omega, defo, res_norm, max_iter)
    raise NoConvergenceError(
        f"no convergence after {max_iter} iterations, residual {res_norm:.3e}"
    )


@dataclass
class BranchResult:
    solutions: list[VStateSolution] = field(default_factory=list)
    failure: str | None = None

    @property
    def last_amplitude(self) -> float | None:
        return self.solutions[-1].amplitude if self.solutions else None


def branch_continue(
    params: LayerParams,
    m: int,
    sign: int,
    s_grid,
    n_modes: int = 32,
    n_nodes: int = 256,
    **solve_kwargs,
) -> BranchResult:
    """Warm-started amplitude continuation along a V-state branch.

    Solves at each amplitude in increasing order, seeding from the
    previous solution; truncates at the first failure and records it.
    """
    result = BranchResult()
    prev: VStateSolution | None = None
    for s in s_grid:
        try:
            sol = vstate_solve(
                params, m, sign, float(s), init=prev,
                n_modes=n_modes, n_nodes=n_nodes, **solve_kwargs,
            )
        except (NoConvergenceError, RadiusCollapseError) as exc:
            result.failure = f"s={float(s):.6g}: {exc}"
            break
        result.solutions.append(sol)
        prev = sol
    return result
