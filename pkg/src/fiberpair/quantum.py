"""Two-photon polarization formalism.

Jones and Stokes vectors for single photons, retarder matrices, the
waveplate analyzer used in front of a polarizing beam splitter, and the
4x4 density matrix of a photon pair with the fidelity / tangle measures.

Conventions
-----------
* Single-photon basis is (|H>, |V>); the pair basis is fixed to
  |HH>, |HV>, |VH>, |VV> and every serialization uses that order.
* Stokes components are expectation values of the Pauli operators
  ordered (Z, X, Y): s1 is H/V, s2 is diagonal/antidiagonal, s3 is circular.
* A retarder with fast axis at ``theta`` applies the retardance as a phase
  on the slow axis.
* The analyzer is traversed half-wave plate first, then quarter-wave plate,
  then the PBS whose transmitted port is H.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Stokes ordering: identity, H/V, D/A, R/L
PAULI = (I2, SIGMA_Z, SIGMA_X, SIGMA_Y)

_YY = np.kron(SIGMA_Y, SIGMA_Y)


class PhysicalityError(ValueError):
    """Raised when a matrix is not an acceptable density matrix."""


# ---------------------------------------------------------------------------
# single-photon states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JonesVector:
    """Pure single-photon polarization state, amplitudes on (|H>, |V>)."""

    h: complex
    v: complex

    @classmethod
    def from_array(cls, arr: Sequence[complex]) -> "JonesVector":
        arr = np.asarray(arr, dtype=complex).ravel()
        if arr.shape != (2,):
            raise ValueError(f"Jones vector needs 2 components, got {arr.shape}")
        return cls(complex(arr[0]), complex(arr[1]))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def normalize(self) -> "JonesVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return JonesVector.from_array(self.array / n)

    def to_stokes(self) -> "StokesVector":
        psi = self.normalize().array
        s = [float(np.real(np.vdot(psi, p @ psi))) for p in PAULI[1:]]
        return StokesVector(*s)

    def overlap(self, other: "JonesVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.array, other.array))


H = JonesVector(1, 0)
V = JonesVector(0, 1)
D = JonesVector(2**-0.5, 2**-0.5)


@dataclass(frozen=True)
class StokesVector:
    """Normalized Stokes vector (s0 = 1 implied)."""

    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if self.s1**2 + self.s2**2 + self.s3**2 > 1 + 1e-9:
            raise ValueError("Stokes vector longer than 1")

    @property
    def array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])

    def degree(self) -> float:
        return float(np.linalg.norm(self.array))

    def to_jones(self) -> JonesVector:
        """A pure state with this Stokes direction (global phase: real H amplitude)."""
        r = self.array
        n = np.linalg.norm(r)
        if n == 0:
            raise ValueError("unpolarized light has no Jones vector")
        s1, s2, s3 = r / n
        theta = np.arccos(np.clip(s1, -1.0, 1.0))
        phi = np.arctan2(s3, s2)
        return JonesVector(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))


def same_state(a: JonesVector, b: JonesVector, tol: float = 1e-9) -> bool:
    """Equality up to global phase."""
    return abs(abs(a.normalize().overlap(b.normalize())) ** 2 - 1.0) < tol


# ---------------------------------------------------------------------------
# retarders and the analyzer
# ---------------------------------------------------------------------------


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def retarder(retardance: float, axis_angle: float) -> np.ndarray:
    """Jones matrix of a linear retarder with its fast axis at ``axis_angle``."""
    core = np.diag([1.0, np.exp(1j * retardance)])
    return rotation(axis_angle) @ core @ rotation(-axis_angle)


def waveplate(kind: str, axis_angle: float) -> np.ndarray:
    if kind == "half":
        return retarder(np.pi, axis_angle)
    if kind == "quarter":
        return retarder(np.pi / 2, axis_angle)
    raise ValueError(f"unknown waveplate kind {kind!r}")


@dataclass(frozen=True)
class AnalyzerSetting:
    """Fast-axis angles (rad) of the two plates; stored modulo pi."""

    qwp_angle: float
    hwp_angle: float

    def __post_init__(self):
        object.__setattr__(self, "qwp_angle", float(np.mod(self.qwp_angle, np.pi)))
        object.__setattr__(self, "hwp_angle", float(np.mod(self.hwp_angle, np.pi)))


def analyzer_projector(setting: AnalyzerSetting) -> JonesVector:
    """State whose projection probability equals the PBS transmission.

    Light meets the half-wave plate, then the quarter-wave plate, then a PBS
    transmitting H, so the transmitted amplitude is <H|Q W|phi> = <psi|phi>.
    """
    hwp = waveplate("half", setting.hwp_angle)
    qwp = waveplate("quarter", setting.qwp_angle)
    psi = (qwp @ hwp).conj().T @ np.array([1, 0], dtype=complex)
    return JonesVector.from_array(psi).normalize()


def solve_analyzer(target: JonesVector, tol: float = 1e-12) -> AnalyzerSetting:
    """Find plate angles whose projector matches ``target`` up to phase."""
    goal = target.normalize().to_stokes().array

    def residual(x):
        return analyzer_projector(AnalyzerSetting(x[0], x[1])).to_stokes().array - goal

    best = None
    grid = np.linspace(0, np.pi, 6, endpoint=False)
    for q0 in grid:
        for h0 in grid:
            res = optimize.least_squares(residual, [q0, h0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
            if best is None or res.cost < best.cost:
                best = res
            if best.cost < tol**2:
                break
        if best.cost < tol**2:
            break
    if np.sqrt(2 * best.cost) > tol:
        raise RuntimeError(f"no plate setting reaches target (residual {np.sqrt(2 * best.cost):.2e})")
    return AnalyzerSetting(*best.x)


# ---------------------------------------------------------------------------
# two-photon density matrices
# ---------------------------------------------------------------------------


def pair_ket(a: JonesVector, b: JonesVector) -> np.ndarray:
    return np.kron(a.array, b.array)


PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).ravel()
    return np.outer(ket, ket.conj())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated two-photon density matrix in the HH, HV, VH, VV basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise PhysicalityError(f"expected 4x4 matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) >= HERMITIAN_TOL:
            raise PhysicalityError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) >= TRACE_TOL:
            raise PhysicalityError(f"trace {np.trace(m).real:.12g} != 1")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise PhysicalityError("matrix has negative eigenvalues")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, ket: Sequence[complex]) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        return cls(projector(ket / np.linalg.norm(ket)))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(np.eye(4, dtype=complex) / 4)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_json(self) -> list:
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]

    @classmethod
    def from_json(cls, data: list) -> "DensityMatrix":
        arr = np.array(data, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def werner(p: float, ket: np.ndarray = PHI_MINUS) -> DensityMatrix:
    return DensityMatrix(p * projector(ket) + (1 - p) * np.eye(4) / 4)


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def fidelity(rho, target) -> float:
    """<target|rho|target> for a pure two-photon target."""
    m = _as_matrix(rho)
    t = np.asarray(target, dtype=complex).ravel()
    if abs(np.linalg.norm(t) - 1) > 1e-9:
        raise ValueError("target state must be normalized")
    val = np.vdot(t, m @ t)
    if abs(val.imag) >= 1e-10:
        raise PhysicalityError(f"fidelity has imaginary part {val.imag:.3e}")
    return float(np.clip(val.real, 0.0, 1.0))


def concurrence(rho) -> float:
    m = _as_matrix(rho)
    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -PSD_TOL:
        raise PhysicalityError("tangle needs a positive semidefinite matrix")
    # lambda_i are the singular values of W^T (Y x Y) W with rho = W W^dagger;
    # this avoids square roots of round-off sized eigenvalues of rho rho~
    w, u = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.where(w < 1e-14, 0.0, w)
    half = u * np.sqrt(w)
    ev = np.linalg.svd(half.T @ _YY @ half, compute_uv=False)
    return float(max(0.0, ev[0] - ev[1:].sum()))


def tangle(rho) -> float:
    """Squared concurrence (Wootters)."""
    return concurrence(rho) ** 2


def nearest_physical(rho_raw) -> DensityMatrix:
    """Clip negative eigenvalues and renormalize.

    Optimal in trace distance for a Hermitian input of unit trace.
    Already physical inputs are returned unchanged.
    """
    m = np.asarray(_as_matrix(rho_raw), dtype=complex)
    m = (m + m.conj().T) / 2
    w, u = np.linalg.eigh(m)
    if w.min() >= 0 and abs(w.sum() - 1) < TRACE_TOL:
        return DensityMatrix(m)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        raise PhysicalityError("no positive spectrum to renormalize")
    w = w / w.sum()
    out = (u * w) @ u.conj().T
    return DensityMatrix((out + out.conj().T) / 2)


def nearest_physical_general(m: np.ndarray) -> np.ndarray:
    """Same clip-and-renormalize map for any dimension (returns an array)."""
    m = np.asarray(m)
    m = (m + m.conj().T) / 2
    w, u = np.linalg.eigh(m)
    w = np.clip(w, 0, None)
    w = w / w.sum()
    return (u * w) @ u.conj().T


def trace_distance(a, b) -> float:
    d = np.asarray(_as_matrix(a)) - np.asarray(_as_matrix(b))
    return float(0.5 * np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2)).sum())


def local_unitary(u: np.ndarray, v: np.ndarray, rho) -> np.ndarray:
    w = np.kron(u, v)
    return w @ _as_matrix(rho) @ w.conj().T


def random_unitary(rng: np.random.Generator, n: int = 2) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> DensityMatrix:
    """Ginibre-distributed state of the given rank."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix((m + m.conj().T) / 2)


def pauli_expand(s: np.ndarray) -> np.ndarray:
    """(1/4) sum_mn S_mn sigma_m (x) sigma_n for a 4x4 array of two-photon Stokes parameters."""
    out = np.zeros((4, 4), dtype=complex)
    for m, pm in enumerate(PAULI):
        for n, pn in enumerate(PAULI):
            out += s[m, n] * np.kron(pm, pn)
    return out / 4


def pauli_coefficients(rho) -> np.ndarray:
    m = _as_matrix(rho)
    return np.array(
        [[np.trace(np.kron(pm, pn) @ m).real for pn in PAULI] for pm in PAULI]
    )


def combine(weights: Iterable[float], states: Iterable) -> DensityMatrix:
    total = sum(w * _as_matrix(s) for w, s in zip(weights, states))
    return DensityMatrix(total)
