import numpy as np
import pytest

from qgpatch import contour as C
from qgpatch import spectrum as S
from qgpatch.kernels import LayerParams

BASE = LayerParams(1.0, 1.0, 1.0, 0.7)
N = 256
THETA = 2 * np.pi * np.arange(N) / N


class TestRadiusProfile:
    def test_zero_deformation(self):
        r = C.radius_profile(1.3, np.zeros(8))
        assert np.all(r == 1.3)

    def test_constant_shift(self):
        eps = 0.01
        r = C.radius_profile(1.0, np.full(8, eps))
        assert np.allclose(r, np.sqrt(1.0 + 2 * eps))

    def test_roundtrip(self):
        rng = np.random.default_rng(7)
        r_in = 0.05 * rng.standard_normal(64)
        radius = C.radius_profile(1.1, r_in)
        back = 0.5 * (radius**2 - 1.1**2)
        assert np.max(np.abs(back - r_in)) < 1e-15

    def test_collapse(self):
        with pytest.raises(C.RadiusCollapseError):
            C.radius_profile(0.5, np.array([-0.2]))


class TestRadialDeformation:
    def test_nodal_consistency(self):
        d = C.RadialDeformation(3, np.array([[0.01, 0.002], [0.0, -0.001]]), 128)
        t = d.grid()
        expected = 0.01 * np.cos(3 * t) + 0.002 * np.cos(6 * t)
        assert np.allclose(d.nodal()[0], expected, atol=1e-15)
        expected_d = -0.03 * np.sin(3 * t) - 0.012 * np.sin(6 * t)
        assert np.allclose(d.nodal_derivative()[0], expected_d, atol=1e-15)

    def test_evenness_and_periodicity(self):
        d = C.RadialDeformation(4, np.array([[0.02], [0.01]]), 128)
        vals = d.nodal()
        assert np.allclose(vals[:, 1:], vals[:, :0:-1], atol=1e-16)  # even
        quarter = 128 // 4
        assert np.allclose(vals, np.roll(vals, quarter, axis=1), atol=1e-16)

    def test_nyquist_guard(self):
        with pytest.raises(ValueError):
            C.RadialDeformation(8, np.zeros((2, 16)), 128)


class TestFunctional:
    @pytest.mark.parametrize("omega", [-1.0, 0.0, 0.5])
    def test_discs_are_roots(self, omega):
        f = C.functional_f(BASE, omega, C.RadialDeformation.zero(2, 8, N))
        assert np.max(np.abs(f)) <= 1e-10

    def test_even_input_odd_output(self):
        d = C.RadialDeformation(2, np.array([[0.02, 0.005], [0.01, 0.0]]), N)
        f = C.functional_f(BASE, 0.3, d)
        reversed_f = f[:, [0] + list(range(N - 1, 0, -1))]  # F(-t)
        assert np.max(np.abs(f + reversed_f)) <= 1e-12

    def test_mfold_shift_invariance(self):
        m = 3
        d = C.RadialDeformation(m, np.array([[0.02, 0.004], [0.01, 0.002]]), 258 // 2 * 2)
        d = C.RadialDeformation(m, d.coeffs, 258)  # N divisible by m
        f = C.functional_f(BASE, 0.1, d)
        shift = 258 // m
        assert np.max(np.abs(f - np.roll(f, -shift, axis=1))) <= 1e-12


class TestLinearization:
    def test_multiplier_consistency(self):
        for n in (1, 4, 9):
            got = C.linearized_multiplier(BASE, 0.27, n)
            assert np.allclose(got, -n * S.matrix_m(BASE, n, 0.27), atol=0)

    def test_singular_at_branch_velocities(self):
        lo, hi = S.omega_pm(BASE, 3)
        for omega in (lo, hi):
            block = C.linearized_multiplier(BASE, omega, 3)
            assert abs(np.linalg.det(block)) <= 1e-11 * np.linalg.norm(block) ** 2

    def test_annihilates_kernel_vector(self):
        vec = S.kernel_vector(BASE, 3, 1)
        block = C.linearized_multiplier(BASE, S.omega_pm(BASE, 3)[1], 3)
        assert np.linalg.norm(block @ vec) <= 1e-11 * np.linalg.norm(block)


class TestJacobianFD:
    def test_matches_multiplier_coincident_discs(self):
        p = LayerParams(1.0, 1.0, 1.0, 1.0)
        jac = C.jacobian_fd(p, 0.3, None, h=1e-6, n_probe=6, n_nodes=N)
        for n in range(1, 7):
            exact = C.linearized_multiplier(p, 0.3, n)
            rel = np.linalg.norm(jac[n - 1, n - 1] - exact) / np.linalg.norm(exact)
            assert rel <= 1e-5
            for n2 in range(1, 7):
                if n2 != n:
                    assert np.max(np.abs(jac[n2 - 1, n - 1])) <= 1e-8

    def test_matches_multiplier_separated_discs(self):
        jac = C.jacobian_fd(BASE, 0.1, None, h=1e-6, n_probe=6, n_nodes=N)
        for n in range(1, 7):
            exact = C.linearized_multiplier(BASE, 0.1, n)
            rel = np.linalg.norm(jac[n - 1, n - 1] - exact) / np.linalg.norm(exact)
            assert rel <= 1e-5

    def test_central_difference_order(self):
        # halving h shrinks the defect by ~4: second-order differencing
        errs = []
        for h in (1e-4, 5e-5):
            jac = C.jacobian_fd(BASE, 0.2, None, h=h, n_probe=2, n_nodes=128)
            exact = C.linearized_multiplier(BASE, 0.2, 1)
            errs.append(np.linalg.norm(jac[0, 0] - exact))
        ratio = errs[0] / errs[1]
        assert 2.5 <= ratio <= 6.0

    def test_step_bounds(self):
        with pytest.raises(ValueError):
            C.jacobian_fd(BASE, 0.2, None, h=1e-3)


class TestVStateSolve:
    def test_zero_amplitude_exact(self):
        sol = C.vstate_solve(BASE, 2, -1, 0.0, n_modes=8, n_nodes=128)
        assert sol.omega == S.omega_pm(BASE, 2)[0]
        assert np.all(sol.deformation.coeffs == 0.0)
        assert sol.residual_norm == 0.0

    @pytest.mark.parametrize("m,sign", [(2, -1), (3, 1)])
    def test_small_amplitude_branch(self, m, sign):
        s = 1e-3
        sol = C.vstate_solve(BASE, m, sign, s, n_modes=16, n_nodes=N)
        assert sol.residual_norm <= 1e-10
        lo, hi = S.omega_pm(BASE, m)
        omega0 = hi if sign == 1 else lo
        # branch continuity: |Omega - Omega_0| <= C s (regression constant)
        assert abs(sol.omega - omega0) <= 1e-2 * s
        # tangency: deformation - s * kernel_vector cos(m t) is O(s^2)
        vec = S.kernel_vector(BASE, m, sign)
        tangent = np.zeros_like(sol.deformation.coeffs)
        tangent[:, 0] = s * vec
        assert np.max(np.abs(sol.deformation.coeffs - tangent)) <= 10 * s * s
        # the amplitude chart pins the first-layer mode-m coefficient
        assert sol.deformation.coeffs[0, 0] == s * vec[0]

    def test_quadrature_independence(self):
        sol = C.vstate_solve(BASE, 2, -1, 1e-3, n_modes=16, n_nodes=N)
        doubled = C.RadialDeformation(2, sol.deformation.coeffs, 2 * N)
        f = C.functional_f(BASE, sol.omega, doubled)
        assert np.max(np.abs(f)) <= 1e-7

    def test_collision_refusal(self):
        # Omega_3^+ meets Omega_6^- at this b2: the 3-fold plus-branch is
        # degenerate inside its own symmetry class
        p = LayerParams(1.0, 1.0, 1.0, 0.7459086390395124)
        with pytest.raises(C.CollisionDetectedError):
            C.vstate_solve(p, 3, 1, 1e-3, n_modes=8, n_nodes=128)

    def test_amplitude_cap(self):
        with pytest.raises(ValueError):
            C.vstate_solve(BASE, 2, -1, 0.5)


class TestBranchContinue:
    def test_first_point_matches_scratch(self):
        grid = [0.002, 0.004]
        res = C.branch_continue(BASE, 2, -1, grid, n_modes=12, n_nodes=N)
        assert res.failure is None and len(res.solutions) == 2
        scratch = C.vstate_solve(BASE, 2, -1, 0.002, n_modes=12, n_nodes=N)
        assert abs(res.solutions[0].omega - scratch.omega) <= 1e-9

    def test_omega_continuity_and_symmetry(self):
        grid = [0.002, 0.004, 0.006, 0.008]
        res = C.branch_continue(BASE, 2, -1, grid, n_modes=12, n_nodes=N)
        omegas = [s.omega for s in res.solutions]
        assert all(abs(b - a) <= 0.1 * 0.002 for a, b in zip(omegas, omegas[1:]))
        # m-fold symmetry: no spurious non-multiple modes in F at the answer
        last = res.solutions[-1]
        f = C.functional_f(BASE, last.omega, last.deformation)
        modes = np.arange(1, 60)
        coefs = C.sine_coefficients(f, modes)
        off = coefs[:, (modes % 2) != 0]
        assert np.max(np.abs(off)) <= 1e-10

    def test_partial_result_on_failure(self):
        # impossible tolerance in zero iterations: fails at the first point
        res = C.branch_continue(
            BASE, 2, -1, [1e-3], n_modes=8, n_nodes=128, max_iter=1, tol=1e-30
        )
        assert res.failure is not None
        assert res.solutions == []
        assert res.last_amplitude is None


class TestSerialization:
    def test_json_roundtrip(self):
        sol = C.vstate_solve(BASE, 2, -1, 1e-3, n_modes=8, n_nodes=128)
        back = C.VStateSolution.from_json_dict(sol.to_json_dict())
        assert back.omega == sol.omega
        assert np.array_equal(back.deformation.coeffs, sol.deformation.coeffs)

    def test_boundary_csv_shape(self):
        sol = C.vstate_solve(BASE, 2, -1, 1e-3, n_modes=8, n_nodes=128)
        lines = sol.boundary_csv().strip().split("\n")
        assert lines[0] == "theta,R1,R2,x1,y1,x2,y2"
        assert len(lines) == 1 + 128
