import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import sqrtm

from fiberpair.quantum import (
    D,
    H,
    PHI_MINUS,
    AnalyzerSetting,
    DensityMatrix,
    JonesVector,
    PhysicalityError,
    StokesVector,
    analyzer_projector,
    combine,
    concurrence,
    fidelity,
    local_unitary,
    nearest_physical,
    nearest_physical_general,
    pair_ket,
    random_density_matrix,
    random_unitary,
    same_state,
    solve_analyzer,
    tangle,
    trace_distance,
    waveplate,
    werner,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def wootters_hermitian(rho):
    """Concurrence from the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho))."""
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    tilde = yy @ rho.conj() @ yy
    s = sqrtm(rho)
    lam = np.sort(np.linalg.eigvalsh(sqrtm(s @ tilde @ s)).clip(0))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


class TestWaveplates:
    @given(angles, st.sampled_from(["half", "quarter"]))
    def test_unitary(self, theta, kind):
        u = waveplate(kind, theta)
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12

    def test_half_at_zero_keeps_h(self):
        out = JonesVector.from_array(waveplate("half", 0) @ H.array)
        assert same_state(out, H)

    def test_half_at_pi_over_8_gives_diagonal(self):
        out = JonesVector.from_array(waveplate("half", math.pi / 8) @ H.array)
        assert same_state(out, D)

    def test_quarter_at_pi_over_4_gives_circular(self):
        out = JonesVector.from_array(waveplate("quarter", math.pi / 4) @ H.array)
        assert abs(abs(out.to_stokes().s3) - 1) < 1e-12

    @pytest.mark.parametrize("kind,ret", [("half", math.pi), ("quarter", math.pi / 2)])
    def test_retardance(self, kind, ret):
        ev = np.linalg.eigvals(waveplate(kind, 0.3))
        diff = abs(np.angle(ev[0] / ev[1]))
        assert diff == pytest.approx(ret, abs=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            waveplate("full", 0)


class TestAnalyzer:
    def test_zero_angles_project_on_h(self):
        assert same_state(analyzer_projector(AnalyzerSetting(0, 0)), H)

    def test_hwp_pi_over_8_projects_on_d(self):
        assert same_state(analyzer_projector(AnalyzerSetting(0, math.pi / 8)), D)

    def test_angles_wrapped(self):
        s = AnalyzerSetting(-0.1, 4.0)
        assert 0 <= s.qwp_angle < math.pi and 0 <= s.hwp_angle < math.pi

    @given(angles, angles)
    def test_projector_is_pbs_transmission(self, q, h):
        """<psi|rho|psi> equals the H-port power after HWP then QWP."""
        s = AnalyzerSetting(q, h)
        psi = analyzer_projector(s).array
        rng = np.random.default_rng(abs(hash((q, h))) % 2**32)
        phi = rng.normal(size=2) + 1j * rng.normal(size=2)
        phi /= np.linalg.norm(phi)
        out = waveplate("quarter", s.qwp_angle) @ waveplate("half", s.hwp_angle) @ phi
        assert abs(out[0]) ** 2 == pytest.approx(abs(np.vdot(psi, phi)) ** 2, abs=1e-12)

    @given(st.floats(-1, 1), st.floats(-math.pi, math.pi))
    def test_solve_reaches_any_state(self, z, phi):
        r = math.sqrt(max(0.0, 1 - z * z))
        target = StokesVector(z, r * math.cos(phi), r * math.sin(phi)).to_jones()
        got = analyzer_projector(solve_analyzer(target))
        assert abs(abs(got.overlap(target)) ** 2 - 1) < 1e-10


class TestStates:
    @given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
    def test_stokes_round_trip(self, a, b):
        if abs(a) ** 2 + abs(b) ** 2 < 1e-6:
            return
        psi = JonesVector(a, b).normalize()
        assert abs(psi.norm() - 1) < 1e-12
        assert same_state(psi.to_stokes().to_jones(), psi)

    def test_stokes_bound(self):
        with pytest.raises(ValueError):
            StokesVector(1, 0.1, 0)

    def test_density_validation(self):
        with pytest.raises(PhysicalityError):
            DensityMatrix(np.diag([1.1, 0, 0, -0.1]))
        with pytest.raises(PhysicalityError):
            DensityMatrix(np.eye(4))
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 0.1
        with pytest.raises(PhysicalityError):
            DensityMatrix(m)

    def test_json_round_trip(self):
        rho = random_density_matrix(np.random.default_rng(1))
        back = DensityMatrix.from_json(rho.to_json())
        assert np.array_equal(back.matrix, rho.matrix)
        assert len(rho.to_json()) == 4 and len(rho.to_json()[0][0]) == 2


class TestFidelity:
    def test_bell(self):
        assert fidelity(DensityMatrix.pure(PHI_MINUS), PHI_MINUS) == pytest.approx(1.0, abs=1e-15)

    def test_mixed(self):
        assert fidelity(DensityMatrix.maximally_mixed(), PHI_MINUS) == pytest.approx(0.25, abs=1e-15)

    def test_rejects_unnormalized_target(self):
        with pytest.raises(ValueError):
            fidelity(DensityMatrix.maximally_mixed(), 2 * PHI_MINUS)

    @given(seeds, st.floats(0, 1))
    def test_bounded_and_linear(self, seed, w):
        rng = np.random.default_rng(seed)
        a, b = random_density_matrix(rng), random_density_matrix(rng, 1)
        ket = rng.normal(size=4) + 1j * rng.normal(size=4)
        ket /= np.linalg.norm(ket)
        fa, fb = fidelity(a, ket), fidelity(b, ket)
        assert 0 <= fa <= 1 and 0 <= fb <= 1
        mix = combine([w, 1 - w], [a, b])
        assert fidelity(mix, ket) == pytest.approx(w * fa + (1 - w) * fb, abs=1e-12)


class TestTangle:
    def test_bell(self):
        assert tangle(DensityMatrix.pure(PHI_MINUS)) == pytest.approx(1.0, abs=1e-12)

    def test_product(self):
        assert tangle(DensityMatrix.pure(pair_ket(H, H))) == pytest.approx(0.0, abs=1e-12)

    def test_werner(self):
        rho = werner(0.96)
        assert wootters_hermitian(rho.matrix) ** 2 == pytest.approx(0.8836, abs=1e-9)
        assert tangle(rho) == pytest.approx(0.8836, abs=1e-9)

    @given(seeds)
    def test_matches_hermitian_form(self, seed):
        rho = random_density_matrix(np.random.default_rng(seed), rank=2)
        assert concurrence(rho) == pytest.approx(wootters_hermitian(rho.matrix), abs=1e-6)

    @given(seeds)
    def test_local_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density_matrix(rng, rank=2)
        rotated = local_unitary(random_unitary(rng), random_unitary(rng), rho)
        assert tangle(rotated) == pytest.approx(tangle(rho), abs=1e-9)

    def test_rejects_non_psd(self):
        with pytest.raises(PhysicalityError):
            tangle(np.diag([1.1, 0, 0, -0.1]))


class TestNearestPhysical:
    @given(seeds)
    def test_idempotent_on_physical(self, seed):
        rho = random_density_matrix(np.random.default_rng(seed))
        assert np.max(np.abs(nearest_physical(rho).matrix - rho.matrix)) < 1e-12

    def test_clip_example(self):
        out = nearest_physical(np.diag([1.1, 0, 0, -0.1]).astype(complex))
        assert np.allclose(out.matrix, np.diag([1, 0, 0, 0]), atol=1e-15)

    @given(seeds)
    def test_output_physical(self, seed):
        rng = np.random.default_rng(seed)
        noise = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        raw = DensityMatrix.pure(PHI_MINUS).matrix + 0.2 * (noise + noise.conj().T)
        raw -= (np.trace(raw) - 1) * np.eye(4) / 4
        out = nearest_physical(raw).matrix
        assert np.linalg.eigvalsh(out).min() >= -1e-10
        assert abs(np.trace(out) - 1) < 1e-10

    def test_grid_oracle_qutrit(self):
        """No physical 3x3 state on a fine grid is closer than the clipped one."""
        rng = np.random.default_rng(5)
        psi = np.array([1, 0, -1]) / math.sqrt(2)
        raw = np.outer(psi, psi) + np.diag([0.15, -0.1, -0.05])
        raw /= np.trace(raw)
        best = trace_distance(nearest_physical_general(raw), raw)
        # diagonal-in-some-basis states: random bases times a simplex grid
        grid = [(a, b, 1 - a - b) for a in np.linspace(0, 1, 41) for b in np.linspace(0, 1, 41) if a + b <= 1]
        w_raw, u_raw = np.linalg.eigh(raw)
        bases = [u_raw] + [np.linalg.qr(rng.normal(size=(3, 3)))[0] for _ in range(40)]
        for u in bases:
            for p in grid:
                cand = (u * np.array(p)) @ u.T
                assert trace_distance(cand, raw) >= best - 1e-12
