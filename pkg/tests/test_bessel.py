import numpy as np
import pytest
from mpmath import mp, besselk

from qgpatch import bessel as B
from oracles import bessel_i_series_mp, ik_product_oracle

GAMMA = B.EULER_GAMMA


class TestBesselJ:
    def test_origin_values(self):
        assert B.bessel_j(0, 0.0) == 1.0
        assert B.bessel_j(1, 0.0) == 0.0

    def test_integral_representation_oracle(self):
        # J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt, midpoint 1e4 nodes
        for n, x in [(0, 2.0), (1, 2.0), (3, 5.0)]:
            edges = np.linspace(0.0, np.pi, 10001)
            tm = 0.5 * (edges[1:] + edges[:-1])
            h = edges[1] - edges[0]
            ref = h * np.sum(np.cos(n * tm - x * np.sin(tm))) / np.pi
            assert B.bessel_j(n, x) == pytest.approx(ref, abs=1e-10)

    def test_negative_argument_parity(self):
        assert B.bessel_j(2, -3.0) == B.bessel_j(2, 3.0)
        assert B.bessel_j(3, -3.0) == -B.bessel_j(3, 3.0)

    def test_rejects_negative_order(self):
        with pytest.raises(ValueError):
            B.bessel_j(-1, 1.0)


class TestBesselI:
    def test_origin_values(self):
        assert B.bessel_i(0, 0.0) == 1.0
        assert B.bessel_i(1, 0.0) == 0.0

    def test_series_oracle(self):
        # 40-term ascending series in extended precision
        assert B.bessel_i(5, 2.5) == pytest.approx(
            bessel_i_series_mp(5, 2.5, terms=40), rel=1e-13
        )

    def test_accuracy_across_range(self):
        with mp.workdps(40):
            for n in (0, 1, 2, 7, 32, 128):
                for x in (0.05, 1.0, 12.0, 30.0, 50.0):
                    ref = float(mp.besseli(n, x))
                    if ref == 0.0:
                        continue
                    assert B.bessel_i(n, x) == pytest.approx(ref, rel=1e-12)

    def test_overflow_is_an_error(self):
        with pytest.raises(OverflowError):
            B.bessel_i(0, 800.0)

    def test_negative_order_reduces(self):
        assert B.bessel_i(-3, 2.0) == B.bessel_i(3, 2.0)

    def test_rejects_negative_argument(self):
        with pytest.raises(ValueError):
            B.bessel_i(0, -1.0)


class TestBesselK:
    def test_small_argument_log_limit(self):
        # K_0(x) + log(x/2) I_0(x) -> Phi(1) = -gamma as x -> 0, at rate x^2
        devs = [
            abs(B.bessel_k(0, x) + np.log(0.5 * x) * B.bessel_i(0, x) + GAMMA)
            for x in (1e-3, 1e-5, 1e-7)
        ]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] <= 1e-12

    def test_k1_matches_derivative_of_k0(self):
        # K_1 = -K_0', central difference at 1.0
        h = 1e-6
        fd = -(B.bessel_k(0, 1.0 + h) - B.bessel_k(0, 1.0 - h)) / (2 * h)
        assert B.bessel_k(1, 1.0) == pytest.approx(fd, abs=1e-8)

    @pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
    def test_wronskian_gate(self, x):
        # I_n K_{n+1} + I_{n+1} K_n = 1/x
        for n in range(0, 33):
            w = B.bessel_i(n, x) * B.bessel_k(n + 1, x) + B.bessel_i(n + 1, x) * B.bessel_k(n, x)
            assert w * x == pytest.approx(1.0, abs=1e-10)

    def test_accuracy_across_range(self):
        with mp.workdps(40):
            for n in (0, 1, 2, 9, 31):
                for x in (0.01, 0.8, 2.9, 3.1, 20.0, 120.0):
                    ref = float(besselk(n, x))
                    assert B.bessel_k(n, x) == pytest.approx(ref, rel=2e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            B.bessel_k(0, 0.0)
        with pytest.raises(ValueError):
            B.bessel_k(2, -1.0)


class TestProduct:
    def test_positive(self):
        for n in range(1, 65):
            assert B.bessel_ik_product(n, 0.8, 1.7) > 0.0

    def test_decreasing_in_n_with_zero_limit(self):
        for x in (0.25, 1.0, 4.0, 16.0):
            vals = [B.bessel_ik_product(n, x, x) for n in range(1, 65)]
            assert all(a > b for a, b in zip(vals, vals[1:]))
        assert B.bessel_ik_product(64, 4.0, 4.0) < 1e-2

    def test_decreasing_in_x(self):
        xs = np.linspace(0.2, 18.0, 40)
        for n in (1, 3, 16):
            vals = [B.bessel_ik_product(n, x, x) for x in xs]
            assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_j0_integral_oracle(self):
        got = B.bessel_ik_product(3, 0.7, 1.3)
        ref = ik_product_oracle(3, 0.7, 1.3)
        assert got == pytest.approx(ref, rel=1e-8)

    def test_gap_bound_grid(self):
        # 0 < (x/y)^n/(2n) - I_n(x) K_n(y) <= 1/(2n)
        xs = np.linspace(0.2, 3.0, 10)
        for x in xs:
            for y in xs:
                if x > y:
                    continue
                for n in range(1, 33):
                    gap = (x / y) ** n / (2 * n) - B.bessel_ik_product(n, x, y)
                    assert 0.0 < gap <= 1.0 / (2 * n) + 1e-15

    def test_extreme_orders_no_underflow(self):
        v = B.bessel_ik_product(512, 0.5, 0.5)
        assert 0.0 < v < 1.0 / 1024 + 1e-12
        with mp.workdps(60):
            ref = float(mp.besseli(512, 0.5) * mp.besselk(512, 0.5))
        assert v == pytest.approx(ref, rel=1e-11)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            B.bessel_ik_product(3, 2.0, 1.0)
        with pytest.raises(ValueError):
            B.bessel_ik_product(3, 0.0, 1.0)


class TestPhi:
    def test_values(self):
        assert B.phi_harmonic(1) == pytest.approx(1.0 - GAMMA, abs=1e-16)
        assert B.phi_harmonic(2) == pytest.approx(1.5 - GAMMA, abs=1e-16)

    def test_direct_sum(self):
        h10 = sum(1.0 / k for k in range(1, 11))
        assert B.phi_harmonic(10) == pytest.approx(h10 - GAMMA, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            B.phi_harmonic(-1)


def test_i1_over_x_strictly_increasing():
    xs = np.linspace(0.05, 20.0, 120)
    vals = [B.bessel_i(1, x) / x for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
