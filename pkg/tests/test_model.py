import math

import numpy as np
import pytest

from udncover import (
    Association,
    FadingModel,
    LosModel,
    NetworkConfig,
    PathLossModel,
    QuadSpec,
    assoc_kernels,
    gamma_ccdf,
    integrate_semi_infinite,
    m_from_k,
    pathloss,
    plos,
)


class TestPlos:
    def test_umi_always_los_below_d1(self):
        assert plos(LosModel.umi(), 10.0) == 1.0
        assert plos(LosModel.umi(), 18.0) == 1.0
        assert plos(LosModel.umi(), 0.0) == 1.0

    def test_umi_at_twice_d2(self):
        # min(18/36, 1)(1 - e^-1) + e^-1 = 0.5 + 0.5 e^-1
        expected = 0.5 + 0.5 * math.exp(-1.0)
        assert plos(LosModel.umi(), 36.0) == pytest.approx(expected, abs=1e-12)

    def test_step_boundary(self):
        step = LosModel.step(18.0)
        assert plos(step, 18.0) == 1.0
        assert plos(step, 18.0001) == 0.0

    def test_constant_and_none(self):
        assert plos(LosModel.constant(0.3), 123.0) == 0.3
        assert plos(LosModel.none(), 5.0) == 0.0

    @pytest.mark.parametrize(
        "model",
        [LosModel.none(), LosModel.constant(0.42), LosModel.umi(), LosModel.step(25.0)],
    )
    def test_bounded_on_random_distances(self, model):
        rng = np.random.default_rng(1234)
        r = rng.uniform(0.0, 1e6, 2000)
        p = plos(model, r)
        assert np.all(p >= 0.0) and np.all(p <= 1.0)

    def test_umi_continuous_and_nonincreasing_beyond_d1(self):
        model = LosModel.umi()
        r = np.linspace(18.0, 2000.0, 5000)
        p = plos(model, r)
        assert np.all(np.diff(p) <= 1e-15)
        # continuity at the d1 kink
        assert plos(model, 18.0 + 1e-9) == pytest.approx(1.0, abs=1e-6)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            plos(LosModel.umi(), -1.0)


class TestMFromK:
    def test_fifteen_db_gives_seventeen(self):
        assert m_from_k(10.0**1.5) == 17

    def test_zero_k_is_rayleigh(self):
        assert m_from_k(0.0) == 1

    def test_unit_k(self):
        # (1+1)^2 / 3 = 4/3 rounds down to 1
        assert m_from_k(1.0) == 1

    def test_rounding_boundary(self):
        # the 2-vs-3 boundary sits where (K+1)^2/(2K+1) crosses 2.5
        k_tie = (3.0 + math.sqrt(15.0)) / 2.0
        assert m_from_k(k_tie + 1e-6) == 3
        assert m_from_k(k_tie - 1e-6) == 2

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            m_from_k(-0.1)

    def test_from_k_factor_constructor(self):
        assert FadingModel.from_k_factor(10.0**1.5).m == 17


class TestGammaCcdf:
    def test_rayleigh_case(self):
        assert gamma_ccdf(1, 0.7) == pytest.approx(math.exp(-0.7), rel=1e-14)

    def test_at_origin(self):
        for m in (1, 2, 17, 40):
            assert gamma_ccdf(m, 0.0) == 1.0

    def test_m2_unit(self):
        assert gamma_ccdf(2, 1.0) == pytest.approx(3.0 * math.exp(-2.0), rel=1e-14)

    def test_matches_exponential_exactly_for_m1(self):
        for z in np.linspace(0.0, 30.0, 50):
            assert gamma_ccdf(1, float(z)) == pytest.approx(math.exp(-z), rel=1e-15, abs=1e-300)

    def test_nonincreasing_and_bounded(self):
        z = np.linspace(0.0, 10.0, 200)
        for m in (1, 3, 17):
            vals = [gamma_ccdf(m, float(v)) for v in z]
            assert all(0.0 <= v <= 1.0 for v in vals)
            assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_large_argument_stable(self):
        # deep in the tail the log-space path must not overflow or return junk
        v = gamma_ccdf(17, 100.0)
        assert 0.0 <= v < 1e-280

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            gamma_ccdf(0, 1.0)
        with pytest.raises(ValueError):
            gamma_ccdf(2, -0.5)


class TestPathLoss:
    def test_single_slope(self):
        assert pathloss(PathLossModel.single_slope(4.0), 2.0) == pytest.approx(0.0625, rel=1e-15)

    def test_dual_slope_boundary_left_closed(self):
        model = PathLossModel(exponents=(2.1, 4.0), transitions=(10.0,))
        assert pathloss(model, 10.0) == pytest.approx(1e-4, rel=1e-12)

    def test_dual_slope_near_field(self):
        model = PathLossModel(exponents=(2.1, 4.0), transitions=(10.0,))
        assert pathloss(model, 5.0) == pytest.approx(5.0**-2.1, rel=1e-12)

    def test_singularity_rejected(self):
        with pytest.raises(ValueError):
            pathloss(PathLossModel.single_slope(4.0), 0.0)

    def test_single_slope_identity(self):
        rng = np.random.default_rng(7)
        model = PathLossModel.single_slope(3.5)
        r = rng.uniform(0.01, 1e4, 500)
        assert np.max(np.abs(model.gain(r) * r**3.5 - 1.0)) < 1e-12

    def test_nonincreasing_within_segments(self):
        model = PathLossModel(exponents=(2.1, 4.0), transitions=(10.0,))
        r = np.linspace(0.1, 9.99, 300)
        assert np.all(np.diff(model.gain(r)) < 0)
        r = np.linspace(10.0, 100.0, 300)
        assert np.all(np.diff(model.gain(r)) < 0)

    @pytest.mark.parametrize(
        "exponents,transitions",
        [((), ()), ((4.0,), (10.0,)), ((2.0, 4.0), ()), ((2.0, 4.0), (-1.0,)), ((2.0, 4.0, 5.0), (20.0, 10.0))],
    )
    def test_invalid_models_rejected(self, exponents, transitions):
        with pytest.raises(ValueError):
            PathLossModel(exponents=exponents, transitions=transitions)


class TestAssocKernels:
    def test_closest_phi_vanishes_at_origin(self):
        phi, _ = assoc_kernels(Association.CLOSEST, 1.0)
        assert phi(0.0) == 0.0

    def test_strongest_nu_is_zero(self):
        _, nu = assoc_kernels(Association.STRONGEST, 1.0)
        for r in (0.0, 1.0, 123.4):
            assert nu(r) == 0.0

    def test_closest_value(self):
        phi, nu = assoc_kernels(Association.CLOSEST, 1.0 / math.pi)
        assert phi(1.0) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-14)
        assert nu(3.0) == 3.0

    def test_closest_phi_integrates_to_one(self):
        phi, _ = assoc_kernels(Association.CLOSEST, 0.37)
        val, _ = integrate_semi_infinite(phi, 0.0, QuadSpec(), tail_decay_hint=math.inf)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_invalid_density(self):
        with pytest.raises(ValueError):
            assoc_kernels(Association.CLOSEST, 0.0)


class TestNetworkConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            NetworkConfig(density=0.0, theta=1.0, association=Association.CLOSEST)
        with pytest.raises(ValueError):
            NetworkConfig(density=1.0, theta=0.0, association=Association.CLOSEST)
        with pytest.raises(ValueError):
            NetworkConfig(density=1.0, theta=1.0, association=Association.CLOSEST, sigma2=-1.0)

    def test_fading_requires_integer_shape(self):
        with pytest.raises(ValueError):
            FadingModel(m=0)
        with pytest.raises(ValueError):
            FadingModel(m=2.5)
