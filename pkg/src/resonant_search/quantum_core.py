"""State vectors, Hermitian operators and exact two-level propagation.

Conventions used across the package: hbar = 1, energies are dimensionless and
times are measured in inverse energy units. Two-level objects are always
ordered (alpha, beta), i.e. target level first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

if TYPE_CHECKING:
    from .search_hamiltonians import SearchInstance

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class StateVector:
    """Unit-norm pure state in an N-dimensional Hilbert space (N >= 2)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValueError(f"amplitudes must be one-dimensional, got shape {amps.shape}")
        if amps.size < 2:
            raise ValueError(f"dimension must be at least 2, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised: |psi| = {norm!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, n: int, k: int) -> StateVector:
        if not 0 <= k < n:
            raise ValueError(f"basis index {k} outside [0, {n})")
        amps = np.zeros(n, dtype=complex)
        amps[k] = 1.0
        return cls(amps)

    @classmethod
    def uniform(cls, n: int) -> StateVector:
        return cls(np.full(n, 1.0 / np.sqrt(n), dtype=complex))

    @classmethod
    def normalized(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class TwoLevelState:
    """Amplitudes on the target level and on its orthogonal complement."""

    c_alpha: complex
    c_beta: complex

    def __post_init__(self):
        c_alpha, c_beta = complex(self.c_alpha), complex(self.c_beta)
        norm_sq = abs(c_alpha) ** 2 + abs(c_beta) ** 2
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"two-level state is not normalised: |c|^2 = {norm_sq!r}")
        object.__setattr__(self, "c_alpha", c_alpha)
        object.__setattr__(self, "c_beta", c_beta)

    @classmethod
    def from_array(cls, vec) -> TwoLevelState:
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (2,):
            raise ValueError(f"expected two amplitudes, got shape {vec.shape}")
        return cls(vec[0], vec[1])

    @classmethod
    def from_overlap(cls, x: float) -> TwoLevelState:
        """The initial state x|alpha> + sqrt(1 - x^2)|beta>."""
        return cls(x, np.sqrt(1.0 - x * x))

    def as_array(self) -> np.ndarray:
        return np.array([self.c_alpha, self.c_beta], dtype=complex)

    @property
    def p_alpha(self) -> float:
        return abs(self.c_alpha) ** 2


@dataclass(frozen=True)
class HermitianTwoLevel:
    """H = h0*I + hx*sx + hy*sy + hz*sz with real coefficients."""

    h0: float
    hx: float
    hy: float
    hz: float

    def __post_init__(self):
        for name in ("h0", "hx", "hy", "hz"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)

    @property
    def omega(self) -> float:
        """Half the eigenvalue splitting, |(hx, hy, hz)|."""
        return float(np.sqrt(self.hx**2 + self.hy**2 + self.hz**2))

    def matrix(self) -> np.ndarray:
        h0, hx, hy, hz = self.h0, self.hx, self.hy, self.hz
        return np.array(
            [[h0 + hz, hx - 1j * hy], [hx + 1j * hy, h0 - hz]],
            dtype=complex,
        )

    @classmethod
    def from_matrix(cls, H) -> HermitianTwoLevel:
        return pauli_decompose(H)


@dataclass(frozen=True)
class DenseHermitian:
    """Full N x N Hermitian matrix."""

    entries: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.entries, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {H.shape}")
        i, j, worst = _worst_hermitian_violation(H)
        if worst > HERMITIAN_TOL:
            raise ValueError(
                f"matrix is not Hermitian: |H[{i},{j}] - conj(H[{j},{i}])| = {worst:.3e}"
            )
        object.__setattr__(self, "entries", _frozen(H))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        return self.entries @ other


def _worst_hermitian_violation(H: np.ndarray) -> tuple[int, int, float]:
    diff = np.abs(H - H.conj().T)
    i, j = np.unravel_index(np.argmax(diff), diff.shape)
    return int(i), int(j), float(diff[i, j])


def pauli_decompose(H, atol: float = HERMITIAN_TOL) -> HermitianTwoLevel:
    """Coefficients of a 2x2 Hermitian matrix in the (I, sx, sy, sz) basis."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {H.shape}")
    i, j, worst = _worst_hermitian_violation(H)
    if worst > atol:
        raise ValueError(
            f"matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ "
            f"from conjugates by {worst:.3e}"
        )
    h00, h11 = H[0, 0].real, H[1, 1].real
    return HermitianTwoLevel(
        h0=(h00 + h11) / 2,
        hx=H[0, 1].real,
        hy=-H[0, 1].imag,
        hz=(h00 - h11) / 2,
    )


def evolve_exact(H: HermitianTwoLevel, psi0, times) -> np.ndarray:
    """exp(-iHt) psi0 for every t in ``times``; returns shape (len(times), 2).

    Uses exp(-iHt) = exp(-i h0 t) [cos(wt) I - i sin(wt) n.sigma] with
    w = |h| and n = h/w.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    global_phase = np.exp(-1j * H.h0 * t)[:, None]
    omega = H.omega
    if omega == 0.0:
        return global_phase * psi0[None, :]
    n_sigma = (H.matrix() - H.h0 * IDENTITY_2) / omega
    rotated = n_sigma @ psi0
    out = np.cos(omega * t)[:, None] * psi0[None, :] - 1j * np.sin(omega * t)[:, None] * rotated[None, :]
    return global_phase * out


def propagate_exact(H: HermitianTwoLevel, psi0: TwoLevelState, t: float) -> TwoLevelState:
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    c = evolve_exact(H, psi0.as_array(), [t])[0]
    # strip the ~1e-16 rounding so the result passes the constructor check
    return TwoLevelState.from_array(c / np.linalg.norm(c))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _uniform_complement(instance: SearchInstance) -> np.ndarray:
    if not instance.is_uniform:
        raise ValueError(
            "two-level embedding requires the uniform initial state; "
            "use decompose_initial for explicit initial states"
        )
    beta = np.full(instance.n, 1.0 / np.sqrt(instance.n - 1), dtype=complex)
    beta[instance.target] = 0.0
    return beta


def embed_two_level(s: TwoLevelState, instance: SearchInstance) -> StateVector:
    beta = _uniform_complement(instance)
    amps = s.c_beta * beta
    amps[instance.target] = s.c_alpha
    return StateVector.normalized(amps)


class Projection(NamedTuple):
    state: TwoLevelState | None
    leakage: float

    @property
    def degenerate(self) -> bool:
        return self.state is None


def project_two_level(v: StateVector, instance: SearchInstance) -> Projection:
    """Project onto span{|alpha>, |beta>}.

    ``leakage`` is the probability outside the subspace. When it is within
    1e-12 of one the projection is degenerate and ``state`` is None.
    """
    if v.n != instance.n:
        raise ValueError(f"dimension mismatch: state {v.n} vs instance {instance.n}")
    beta = _uniform_complement(instance)
    c_alpha = v.amplitudes[instance.target]
    c_beta = np.vdot(beta, v.amplitudes)
    kept = abs(c_alpha) ** 2 + abs(c_beta) ** 2
    leakage = float(1.0 - kept)
    if kept <= NORM_TOL:
        return Projection(None, leakage)
    scale = np.sqrt(kept)
    return Projection(TwoLevelState(c_alpha / scale, c_beta / scale), leakage)
