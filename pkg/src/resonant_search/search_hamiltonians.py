"""Search Hamiltonians and their effective two-level parameters.

H_g   = E(|a><a| + |psi><psi|) + eps(e^{i phi}|a><psi| + e^{-i phi}|psi><a|)
H_ls  = e_alpha|a><a| + e_beta|b><b| + gamma(e^{i(wt+phi')}|a><b| + h.c.)

Writing psi = x|a> + sqrt(1-x^2)|b>, H_g restricted to span{|a>, |b>} is

    [[E(1+x^2) + 2 eps x cos(phi),  sqrt(1-x^2)(Ex + eps e^{i phi})],
     [c.c.,                         E(1-x^2)                       ]]

which fixes e_alpha, e_beta, gamma and phi' below. The drive frequency that
closes the diagonal gap is w_res = e_beta - e_alpha = 2x(-Ex - eps cos(phi)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum_core import (
    NORM_TOL,
    DenseHermitian,
    HermitianTwoLevel,
    StateVector,
    pauli_decompose,
)

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class SearchInstance:
    """Search over ``n`` items for ``target``.

    ``initial`` is None for the uniform superposition, otherwise an explicit
    unit vector that must differ from the target basis state.
    """

    n: int
    target: int = 0
    initial: StateVector | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not 0 <= self.target < self.n:
            raise ValueError(f"target {self.target} outside [0, {self.n})")
        if self.initial is not None:
            if self.initial.n != self.n:
                raise ValueError(f"initial state has dimension {self.initial.n}, expected {self.n}")
            if abs(self.initial.amplitudes[self.target]) >= 1.0 - NORM_TOL:
                raise ValueError("initial state coincides with the target; nothing to search")

    @property
    def is_uniform(self) -> bool:
        return self.initial is None

    def initial_state(self) -> StateVector:
        return StateVector.uniform(self.n) if self.initial is None else self.initial

    def target_state(self) -> StateVector:
        return StateVector.basis(self.n, self.target)


@dataclass(frozen=True)
class DriveParams:
    energy: float
    epsilon: float
    phi: float

    def __post_init__(self):
        if not (np.isfinite(self.energy) and self.energy > 0):
            raise ValueError(f"energy must be positive, got {self.energy}")
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not np.isfinite(self.phi):
            raise ValueError("phi must be finite")


@dataclass(frozen=True)
class EffectiveTwoLevel:
    x: float
    e_alpha: float
    e_beta: float
    gamma: float
    phi_prime: float
    w_res: float
    valid: bool
    reason: str = ""
    degenerate: bool = field(default=False)

    @property
    def coupling(self) -> complex:
        """The (alpha, beta) matrix element gamma * exp(i phi')."""
        return self.gamma * np.exp(1j * self.phi_prime)

    @property
    def gap(self) -> float:
        return self.e_beta - self.e_alpha

    def matrix(self) -> np.ndarray:
        g = self.coupling
        return np.array([[self.e_alpha, g], [np.conj(g), self.e_beta]], dtype=complex)


def decompose_initial(instance: SearchInstance) -> tuple[float, StateVector]:
    """Split psi into x|alpha> + sqrt(1-x^2)|beta> with x real and positive.

    Any phase on <alpha|psi> is absorbed into the target state.
    """
    n, target = instance.n, instance.target
    if instance.is_uniform:
        beta = np.full(n, 1.0 / np.sqrt(n - 1), dtype=complex)
        beta[target] = 0.0
        return 1.0 / np.sqrt(n), StateVector.normalized(beta)

    psi = instance.initial.amplitudes
    overlap = psi[target]
    x = abs(overlap)
    if x >= 1.0 - NORM_TOL:
        raise ValueError("initial state coincides with the target; nothing to search")
    # with |alpha'> = e^{i arg} |alpha>, <alpha'|psi> = x is real
    alpha_phase = overlap / x if x > 0 else 1.0
    residual = psi.copy()
    residual[target] -= x * alpha_phase
    beta = residual / np.sqrt(1.0 - x * x)
    return float(x), StateVector.normalized(beta)


def validity(energy: float, epsilon: float, phi: float, x: float) -> tuple[bool, str]:
    """Check eps > E x and cos(phi) < -E x / eps for a resonant drive."""
    ex = energy * x
    if not epsilon > ex:
        return False, f"epsilon must exceed E*x: eps > Ex required (eps = {epsilon:.6g}, Ex = {ex:.6g})"
    bound = -ex / epsilon
    if not np.cos(phi) < bound:
        return False, (
            f"phase outside the resonant window: cos(phi) < -Ex/eps required "
            f"(cos(phi) = {np.cos(phi):.6g}, -Ex/eps = {bound:.6g})"
        )
    return True, ""


def effective_params(d: DriveParams, x: float) -> EffectiveTwoLevel:
    if not 0.0 < x < 1.0:
        raise ValueError(f"overlap x must lie in (0, 1), got {x}")
    E, eps, phi = d.energy, d.epsilon, d.phi
    s = np.sqrt(1.0 - x * x)
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    z = complex(E * x + eps * cos_phi, eps * sin_phi)

    degenerate = z == 0
    gamma = s * abs(z)
    phi_prime = 0.0 if degenerate else float(np.angle(z))
    valid, reason = validity(E, eps, phi, x)
    if degenerate:
        valid, reason = False, "degenerate coupling: Ex + eps e^{i phi} = 0"

    return EffectiveTwoLevel(
        x=float(x),
        e_alpha=float(E * (1.0 + x * x) + 2.0 * eps * x * cos_phi),
        e_beta=float(E * (1.0 - x * x)),
        gamma=float(gamma),
        phi_prime=phi_prime,
        w_res=float(2.0 * x * (-E * x - eps * cos_phi)),
        valid=valid,
        reason=reason,
        degenerate=degenerate,
    )


def iontrap_frequency(n: int, E: float, epsilon: float) -> float:
    """Resonant V-pulse frequency (2/n)(sqrt(n) eps - E)."""
    return 2.0 / n * (np.sqrt(n) * epsilon - E)


def build_hg_dense(
    instance: SearchInstance, d: DriveParams, dense_limit: int = DENSE_LIMIT
) -> DenseHermitian:
    """Full N x N generalized search Hamiltonian.

    The second cross term is taken as e^{-i phi}|psi><alpha|, the Hermitian
    conjugate of the first.
    """
    if instance.n > dense_limit:
        raise ValueError(
            f"n = {instance.n} exceeds the dense limit {dense_limit}; "
            "use the effective two-level model instead"
        )
    E, eps, phi = d.energy, d.epsilon, d.phi
    psi = instance.initial_state().amplitudes
    alpha = instance.target_state().amplitudes
    p_alpha = np.outer(alpha, alpha.conj())
    p_psi = np.outer(psi, psi.conj())
    cross = np.exp(1j * phi) * np.outer(alpha, psi.conj())
    H = E * (p_alpha + p_psi) + eps * (cross + cross.conj().T)
    return DenseHermitian(H)


def build_hg_effective(
    eff: EffectiveTwoLevel, d: DriveParams | None = None, x: float | None = None
) -> HermitianTwoLevel:
    """Time-independent H_g on span{|alpha>, |beta>}.

    Passing ``d`` and ``x`` verifies that ``eff`` was derived from them.
    """
    if d is not None and x is not None:
        expected = effective_params(d, x)
        if not np.allclose(expected.matrix(), eff.matrix(), rtol=0, atol=1e-12):
            raise ValueError("effective parameters are inconsistent with (d, x)")
    return pauli_decompose(eff.matrix())


def build_hls(eff: EffectiveTwoLevel, w: float, t: float) -> HermitianTwoLevel:
    g = eff.gamma * np.exp(1j * (w * t + eff.phi_prime))
    return HermitianTwoLevel(
        h0=(eff.e_alpha + eff.e_beta) / 2,
        hx=g.real,
        hy=-g.imag,
        hz=(eff.e_alpha - eff.e_beta) / 2,
    )


def build_iontrap(n: int, E: float, epsilon: float) -> EffectiveTwoLevel:
    """Ion-trap instance: uniform initial state and phi = pi."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return effective_params(DriveParams(E, epsilon, np.pi), 1.0 / np.sqrt(n))
