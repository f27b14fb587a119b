import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fiberpair.quantum import PHI_MINUS, DensityMatrix, fidelity
from fiberpair.source import (
    EfficiencyChain,
    SagnacConfig,
    SourceConfig,
    SpectralConfig,
    balancing_split,
    calibrate_mean_pairs,
    chain_product,
    coherence_fwhm_fs,
    hom_dip_fwhm_fs,
    mean_pairs,
    pair_extraction,
    photon_bandwidth,
    pump_induced_width,
    raman_mean,
    sagnac_mean_pairs,
    sagnac_state,
    spectral_efficiency,
)

SIGNAL = EfficiencyChain.of(("fiber", 0.96), ("lens", 0.98), ("spectral", 0.28), ("coupling", 0.50))
IDLER = EfficiencyChain.of(("fiber", 0.96), ("lens", 0.98), ("spectral", 0.38), ("coupling", 0.50))
effs = st.lists(st.floats(0, 1), max_size=8)


class TestChain:
    def test_table_values(self):
        assert chain_product(SIGNAL) == pytest.approx(0.13, abs=0.006)
        assert chain_product(IDLER) == pytest.approx(0.18, abs=0.006)
        assert pair_extraction(SIGNAL, IDLER) == pytest.approx(0.023, abs=0.001)

    def test_with_detectors(self):
        eta = pair_extraction(SIGNAL.append("det", 0.56), IDLER.append("det", 0.43))
        assert eta == pytest.approx(0.0056, abs=0.0003)

    def test_empty_and_identity(self):
        assert chain_product(EfficiencyChain()) == 1.0
        one = EfficiencyChain.of(("a", 1.0), ("b", 1.0))
        assert pair_extraction(one, one) == 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            EfficiencyChain.of(("bad", 1.2))

    @given(effs, st.randoms())
    def test_permutation_invariant(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        assert chain_product(ys) == pytest.approx(chain_product(xs), rel=1e-12, abs=1e-300)

    @given(effs, effs)
    def test_multiplicative(self, xs, ys):
        a = EfficiencyChain(tuple((f"a{k}", x) for k, x in enumerate(xs)))
        b = EfficiencyChain(tuple((f"b{k}", y) for k, y in enumerate(ys)))
        assert chain_product(a + b) == pytest.approx(chain_product(a) * chain_product(b), rel=1e-12, abs=1e-300)


class TestSpectral:
    def test_signal(self):
        eff = spectral_efficiency(SpectralConfig(0.17, 0.39, 0.80, 2, 0.0))
        assert eff == pytest.approx(0.279, abs=5e-4)
        assert round(eff, 2) == 0.28

    def test_idler(self):
        eff = spectral_efficiency(SpectralConfig(0.30, 0.45, 0.80, 2, 0.10))
        assert eff == pytest.approx(0.384, abs=5e-4)
        assert round(eff, 2) == 0.38

    def test_identity(self):
        assert spectral_efficiency(SpectralConfig(0.2, 0.2, 1.0, 1, 0.0)) == 1.0

    def test_filter_wider_than_photon_caps(self):
        assert spectral_efficiency(SpectralConfig(1.0, 0.2, 0.8, 1, 0.0)) == pytest.approx(0.8)

    @pytest.mark.parametrize("f,p", [(0, 0.4), (0.2, 0), (-1, 0.4)])
    def test_rejects_bad_widths(self, f, p):
        with pytest.raises(ValueError):
            SpectralConfig(f, p)

    @given(st.floats(0.01, 2), st.floats(0.01, 2), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
    def test_monotone(self, f, ph, g, loss, d):
        base = spectral_efficiency(SpectralConfig(f, ph, g, 2, loss))
        assert spectral_efficiency(SpectralConfig(f + d, ph, g, 2, loss)) >= base
        assert spectral_efficiency(SpectralConfig(f, ph + d, g, 2, loss)) <= base
        assert spectral_efficiency(SpectralConfig(f, ph, min(1, g + d), 2, loss)) >= base
        assert spectral_efficiency(SpectralConfig(f, ph, g, 2, min(1, loss + d))) <= base


class TestBandwidth:
    def test_signal_width(self):
        assert photon_bandwidth(0.17, 0.351) == pytest.approx(0.39, abs=0.005)

    def test_idler_width_consistent(self):
        assert photon_bandwidth(0.30, 0.335) == pytest.approx(0.45, abs=0.01)
        # one pump-induced term fits both published widths
        assert abs(pump_induced_width(0.17, 0.39) - pump_induced_width(0.30, 0.45)) < 0.02

    @given(st.floats(0.01, 5))
    def test_no_pump_term(self, w):
        assert photon_bandwidth(w, 0) == pytest.approx(w)

    def test_coherence_of_order_ps(self):
        t = hom_dip_fwhm_fs(0.30, 801.2)
        assert 1000 < t < 10000
        assert t == pytest.approx(math.sqrt(2) * coherence_fwhm_fs(0.30, 801.2))


class TestPairRates:
    def test_zero_power(self):
        assert mean_pairs(SourceConfig(mean_pairs_per_pulse_at_1mW=0.03), 0.0) == 0.0

    @given(st.floats(1e-3, 10), st.floats(1e-4, 0.5))
    def test_quadratic(self, p, mu1):
        cfg = SourceConfig(mean_pairs_per_pulse_at_1mW=mu1)
        assert mean_pairs(cfg, p) / mean_pairs(cfg, p / 2) == pytest.approx(4.0, rel=1e-12)

    def test_raman_linear(self):
        cfg = SourceConfig(raman_singles_per_pulse=(0.01, 0.002))
        assert raman_mean(cfg, 0, 2.0) == pytest.approx(2 * raman_mean(cfg, 0, 1.0))

    def test_calibration(self):
        mu = calibrate_mean_pairs(3800, 0.5, 76e6, 0.0056) * 0.25
        assert mu == pytest.approx(3800 / (76e6 * 0.0056))
        assert mu == pytest.approx(0.0089, abs=0.0001)

    def test_validation(self):
        with pytest.raises(ValueError):
            SourceConfig(rep_rate=0)
        with pytest.raises(ValueError):
            SourceConfig(pair_number_model="binomial")
        with pytest.raises(ValueError):
            SourceConfig(raman_singles_per_pulse=(-1, 0))


class TestSagnac:
    def test_ideal_is_phi_minus(self):
        rho = sagnac_state(SagnacConfig())
        assert fidelity(rho, PHI_MINUS) == pytest.approx(1.0, abs=1e-12)

    def test_balancing_cancels_imbalance(self):
        cfg = SagnacConfig(direction_imbalance=1.2, pump_split_ratio=balancing_split(1.2))
        m = sagnac_state(cfg).matrix
        assert abs(m[0, 0] - m[3, 3]) < 1e-9
        cw, ccw = sagnac_mean_pairs(cfg, SourceConfig(mean_pairs_per_pulse_at_1mW=0.03), 1.0)
        assert cw == pytest.approx(ccw, rel=1e-12)

    def test_unbalanced_split(self):
        m = sagnac_state(SagnacConfig(direction_imbalance=1.2)).matrix
        assert m[0, 0].real / m[3, 3].real == pytest.approx(1.2)

    def test_extinction_fidelity(self):
        rho = sagnac_state(SagnacConfig(polarization_extinction=200))
        expected = np.vdot(PHI_MINUS, rho.matrix @ PHI_MINUS).real
        assert fidelity(rho, PHI_MINUS) == pytest.approx(expected, abs=1e-15)
        assert fidelity(rho, PHI_MINUS) == pytest.approx(1 - 1 / 200, abs=1e-12)

    @given(st.floats(0.1, 10), st.floats(0.01, 0.99), st.floats(-7, 7), st.floats(1, 1e6))
    def test_always_valid(self, imb, split, phase, ext):
        rho = sagnac_state(SagnacConfig(imb, split, phase, ext))
        assert isinstance(rho, DensityMatrix)
        assert np.linalg.eigvalsh(rho.matrix).min() > -1e-10

    def test_rejects_extinction_below_one(self):
        with pytest.raises(ValueError):
            SagnacConfig(polarization_extinction=0.5)
