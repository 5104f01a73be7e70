"""
Continuous problem definition.

The equation is posed on D = (0, L) with homogeneous Dirichlet conditions:

    D_t^{alpha,nu} u + (-Delta)^beta u = f(t,u) + g(t,u) dW/dt + h(t,u) dW^H/dt
    u(0) = a,  du/dt(0) = b

Everything is expressed in the Dirichlet sine basis phi_k with eigenvalues
lambda_k = (k pi / L)^2. The driving noises are expanded in the same basis,
W = sum_k sigma_k(t) xi_k(t) phi_k and W^H = sum_k rho_k(t) xi^H_k(t) phi_k.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from typing_extensions import TypeAlias

from .errors import ModelValidationError, UnknownNonlinearityError

logger = logging.getLogger(__name__)

ModalVector: TypeAlias = np.ndarray


def _frozen(values: ArrayLike) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Spectral basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SineMode:
    """phi_k(x) = sqrt(2/L) sin(k pi x / L)."""
    k: int
    domain_len: float

    def __call__(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / self.domain_len) * np.sin(self.k * math.pi * x / self.domain_len)


def eigenvalues(n_modes: int, domain_len: float) -> np.ndarray:
    """Dirichlet eigenvalues lambda_k = (k pi / L)^2 for k = 1..n_modes."""
    k = np.arange(1, n_modes + 1, dtype=float)
    return (k * math.pi / domain_len) ** 2


def eigenpair(k: int, domain_len: float) -> Tuple[float, SineMode]:
    """
    Dirichlet eigenpair of -d^2/dx^2 on (0, L).

    Args:
        k: Mode index, k >= 1
        domain_len: L > 0

    Returns:
        (lambda_k, phi_k)
    """
    if k < 1:
        raise ModelValidationError(f"mode index k >= 1 (got {k})")
    if not domain_len > 0:
        raise ModelValidationError(f"L > 0 (got {domain_len})")
    return (k * math.pi / domain_len) ** 2, SineMode(k, float(domain_len))


def frac_laplacian_apply(coeffs: ArrayLike, beta: float, domain_len: float = 1.0) -> ModalVector:
    """Multiply modal coefficients (last axis) by lambda_k^beta."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs * eigenvalues(coeffs.shape[-1], domain_len) ** beta


def hs_norm(coeffs: ArrayLike, s: float, domain_len: float = 1.0) -> np.ndarray:
    """H^s norm sqrt(sum_k lambda_k^s c_k^2) over the last axis."""
    coeffs = np.asarray(coeffs, dtype=float)
    weights = eigenvalues(coeffs.shape[-1], domain_len) ** s
    return np.sqrt(np.sum(weights * coeffs ** 2, axis=-1))


def parabola_coefficients(n_modes: int, domain_len: float = 1.0) -> ModalVector:
    """Sine coefficients of a(x) = x (L - x)."""
    k = np.arange(1, n_modes + 1, dtype=float)
    integral = domain_len ** 3 * 2.0 * (1.0 - (-1.0) ** k) / (k * math.pi) ** 3
    return math.sqrt(2.0 / domain_len) * integral


def initial_profile(name: str, n_modes: int, domain_len: float = 1.0) -> ModalVector:
    """
    Named initial data: "zero", "parabola", or "mode:<k>" (the unit vector e_k).
    """
    if name == "zero":
        return np.zeros(n_modes)
    if name == "parabola":
        return parabola_coefficients(n_modes, domain_len)
    if name.startswith("mode:"):
        k = int(name.split(":", 1)[1])
        if not 1 <= k <= n_modes:
            raise ModelValidationError(f"1 <= k <= K for profile {name}")
        out = np.zeros(n_modes)
        out[k - 1] = 1.0
        return out
    raise ModelValidationError(f"known initial profile (got '{name}')")


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------

class NonlinearityKind(str, Enum):
    ZERO = "zero"
    AFFINE = "affine"
    SINE_BOUNDED = "sine-bounded"
    DIAGONAL_MULTIPLICATIVE = "diagonal-multiplicative"
    DENSE = "dense"


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    """
    Nonlinearity acting on modal coefficients.

    Attributes:
        kind: Functional form
        lipschitz_l: Lipschitz and growth constant l. None means the smallest
            constant certified for the truncation K in use (see growth_constant).
        c0: Constant offset (affine and diagonal-multiplicative)
        c1: Slope (affine and diagonal-multiplicative)
        matrix: Constant g^{j,k} image of the dense kind

    Drift images (f) are modal vectors; noise images (g, h) are K x K operators,
    diagonal for every kind except dense. Both satisfy

        ||F(t,u1) - F(t,u2)|| <= l ||u1 - u2||,   ||F(t,u)|| <= l (1 + ||u||)

    with the Euclidean norm for vectors and the Hilbert-Schmidt norm for operators.
    """
    kind: NonlinearityKind = NonlinearityKind.ZERO
    lipschitz_l: Optional[float] = None
    c0: float = 0.0
    c1: float = 0.0
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        except ValueError as exc:
            raise UnknownNonlinearityError(f"unknown nonlinearity kind '{self.kind}'") from exc
        if self.lipschitz_l is not None and self.lipschitz_l < 0:
            raise ModelValidationError(f"lipschitz_l >= 0 (got {self.lipschitz_l})")
        if self.kind == NonlinearityKind.SINE_BOUNDED:
            if self.lipschitz_l is None:
                raise ModelValidationError("sine-bounded kind needs lipschitz_l (it is the amplitude)")
            if self.c0 != 0.0 or self.c1 != 0.0:
                raise ModelValidationError("sine-bounded kind is l*sin(u); c0 and c1 must be 0")
        if self.kind == NonlinearityKind.DENSE:
            if self.matrix is None:
                raise ModelValidationError("dense nonlinearity carries a matrix")
            object.__setattr__(self, "matrix", _frozen(self.matrix))
        if self.lipschitz_l is not None and self.lipschitz_l < self.slope:
            raise ModelValidationError(
                f"{self.kind.value} lipschitz_l >= slope (got l={self.lipschitz_l}, slope={self.slope})"
            )

    @property
    def is_zero(self) -> bool:
        return self.kind == NonlinearityKind.ZERO

    @property
    def is_diagonal(self) -> bool:
        return self.kind != NonlinearityKind.DENSE

    @property
    def slope(self) -> float:
        """Lipschitz constant of the map u -> F(t, u)."""
        if self.kind in (NonlinearityKind.AFFINE, NonlinearityKind.DIAGONAL_MULTIPLICATIVE):
            return abs(self.c1)
        if self.kind == NonlinearityKind.SINE_BOUNDED:
            return float(self.lipschitz_l)
        return 0.0

    def offset_norm(self, n_modes: int) -> float:
        """||F(t, 0)|| at truncation K."""
        if self.kind == NonlinearityKind.DENSE:
            return float(np.linalg.norm(self.matrix))
        if self.kind in (NonlinearityKind.AFFINE, NonlinearityKind.DIAGONAL_MULTIPLICATIVE):
            return abs(self.c0) * math.sqrt(n_modes)
        return 0.0

    def growth_constant(self, n_modes: int) -> float:
        """Smallest l giving both the Lipschitz and the linear-growth bound at truncation K."""
        return max(self.slope, self.offset_norm(n_modes))

    def constant(self, n_modes: int) -> float:
        """The l in force at truncation K."""
        return self.growth_constant(n_modes) if self.lipschitz_l is None else float(self.lipschitz_l)

    def check_growth(self, n_modes: int, name: str = "nonlinearity") -> None:
        if self.lipschitz_l is None:
            return
        needed = self.growth_constant(n_modes)
        if self.lipschitz_l < needed * (1.0 - 1e-12):
            raise ModelValidationError(
                f"{name} lipschitz_l >= max(slope, ||F(t,0)||) = {needed:.6g} at K={n_modes} "
                f"(got {self.lipschitz_l})"
            )

    @classmethod
    def zero(cls) -> "NonlinearitySpec":
        return cls()

    @classmethod
    def affine(cls, c0: float, c1: float, lipschitz_l: Optional[float] = None) -> "NonlinearitySpec":
        return cls(NonlinearityKind.AFFINE, lipschitz_l, c0, c1)

    @classmethod
    def sine_bounded(cls, lipschitz_l: float) -> "NonlinearitySpec":
        return cls(NonlinearityKind.SINE_BOUNDED, lipschitz_l)

    @classmethod
    def diagonal_multiplicative(cls, c0: float, c1: float, lipschitz_l: Optional[float] = None) -> "NonlinearitySpec":
        """sigma(u) = c0 + c1 u / sqrt(1 + u^2) on the operator diagonal."""
        return cls(NonlinearityKind.DIAGONAL_MULTIPLICATIVE, lipschitz_l, c0, c1)

    @classmethod
    def dense(cls, matrix: ArrayLike) -> "NonlinearitySpec":
        return cls(NonlinearityKind.DENSE, matrix=np.asarray(matrix, dtype=float))


def _pointwise(spec: NonlinearitySpec, u: np.ndarray) -> np.ndarray:
    """Componentwise map sigma(u) shared by the drift image and the operator diagonal."""
    if spec.kind == NonlinearityKind.ZERO:
        return np.zeros_like(u)
    if spec.kind == NonlinearityKind.AFFINE:
        return spec.c0 + spec.c1 * u
    if spec.kind == NonlinearityKind.SINE_BOUNDED:
        return spec.lipschitz_l * np.sin(u)
    if spec.kind == NonlinearityKind.DIAGONAL_MULTIPLICATIVE:
        return spec.c0 + spec.c1 * u / np.sqrt(1.0 + u * u)
    raise UnknownNonlinearityError(f"no pointwise form for kind '{spec.kind.value}'")


def apply_nonlinearity(spec: NonlinearitySpec, t: float, u_coeffs: ArrayLike, role: str = "drift") -> np.ndarray:
    """
    Image of a nonlinearity at (t, u).

    Args:
        spec: Nonlinearity
        t: Time (the built-in kinds are autonomous)
        u_coeffs: Modal coefficients, length K
        role: "drift" for f (modal vector) or "noise" for g, h (K x K operator)

    Returns:
        Modal vector for the drift role, K x K matrix g^{j,k} for the noise role
    """
    u = np.asarray(u_coeffs, dtype=float)
    if role == "drift":
        if spec.kind == NonlinearityKind.DENSE:
            raise UnknownNonlinearityError("dense kind is an operator image; use role='noise'")
        return _pointwise(spec, u)
    if role == "noise":
        if spec.kind == NonlinearityKind.DENSE:
            if spec.matrix.shape != (u.size, u.size):
                raise ModelValidationError(f"dense matrix is K x K with K={u.size}")
            return np.array(spec.matrix)
        return np.diag(_pointwise(spec, u))
    raise ValueError(f"role must be 'drift' or 'noise', got '{role}'")


def drift_image(spec: NonlinearitySpec, t: float, u: np.ndarray) -> np.ndarray:
    """Batched f(t, u) for u of shape (S, K)."""
    if spec.is_zero:
        return np.zeros_like(u)
    return _pointwise(spec, u)


def noise_operator_apply(spec: NonlinearitySpec, t: float, u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Batched sum_l g^{k,l}(t, u) w_l for u, weights of shape (S, K)."""
    if spec.is_zero:
        return np.zeros_like(u)
    if spec.kind == NonlinearityKind.DENSE:
        return weights @ spec.matrix.T
    return _pointwise(spec, u) * weights


# ---------------------------------------------------------------------------
# Noise coefficient sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequenceRule:
    """
    One noise coefficient sequence and its approximation.

    Exact:  sigma_k(t) = mu_k (1 + eps sin(2 pi t / T)) / (1 + |eps|),  mu_k = scale * exp(-decay k)
    Approx: sigma_k^n(t) = sigma_k(t) (1 + delta) for k <= truncation, 0 beyond
    """
    decay: float = 1.0
    scale: float = 1.0
    modulation: float = 0.0
    perturbation: float = 0.0
    truncation: Optional[int] = None

    def __post_init__(self):
        if self.decay <= 0:
            raise ModelValidationError(f"coefficient decay > 0 (got {self.decay})")
        if self.truncation is not None and self.truncation < 0:
            raise ModelValidationError(f"truncation >= 0 (got {self.truncation})")

    def mu(self, n_modes: int) -> np.ndarray:
        k = np.arange(1, n_modes + 1, dtype=float)
        return abs(self.scale) * np.exp(-self.decay * k)

    def _envelope(self, t: ArrayLike, horizon: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eps = self.modulation
        return (1.0 + eps * np.sin(2.0 * math.pi * t / horizon)) / (1.0 + abs(eps))

    def exact(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        """sigma_k(t); shape t.shape + (K,)."""
        env = self._envelope(t, horizon)
        return math.copysign(1.0, self.scale) * env[..., None] * self.mu(n_modes)

    def approx(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        """sigma_k^n(t); shape t.shape + (K,)."""
        values = self.exact(t, n_modes, horizon) * (1.0 + self.perturbation)
        if self.truncation is not None:
            values[..., self.truncation:] = 0.0
        return values

    def gamma(self, n_modes: int, horizon: float) -> np.ndarray:
        """Bound on |d sigma_k / dt|."""
        eps = abs(self.modulation)
        return self.mu(n_modes) * eps * 2.0 * math.pi / (horizon * (1.0 + eps))

    def eta(self, n_modes: int) -> np.ndarray:
        """Bound on |sigma_k - sigma_k^n|."""
        eta = self.mu(n_modes) * abs(self.perturbation)
        if self.truncation is not None:
            eta[self.truncation:] = self.mu(n_modes)[self.truncation:]
        return eta


@dataclass(frozen=True)
class CoeffSequences:
    """Coefficient sequences of the white (sigma) and fractional (rho) noise."""
    sigma: SequenceRule = field(default_factory=SequenceRule)
    rho: SequenceRule = field(default_factory=SequenceRule)

    def sigma_k(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        return self.sigma.exact(t, n_modes, horizon)

    def rho_k(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        return self.rho.exact(t, n_modes, horizon)

    def sigma_k_n(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        return self.sigma.approx(t, n_modes, horizon)

    def rho_k_n(self, t: ArrayLike, n_modes: int, horizon: float) -> np.ndarray:
        return self.rho.approx(t, n_modes, horizon)

    def mu_k(self, n_modes: int) -> np.ndarray:
        return self.sigma.mu(n_modes)

    def mu_tilde_k(self, n_modes: int) -> np.ndarray:
        return self.rho.mu(n_modes)

    def gamma_k(self, n_modes: int, horizon: float) -> np.ndarray:
        return self.sigma.gamma(n_modes, horizon)

    def gamma_tilde_k(self, n_modes: int, horizon: float) -> np.ndarray:
        return self.rho.gamma(n_modes, horizon)

    def eta_k_n(self, n_modes: int) -> np.ndarray:
        return self.sigma.eta(n_modes)

    def eta_tilde_k_n(self, n_modes: int) -> np.ndarray:
        return self.rho.eta(n_modes)

    def modeling_floor(self, n_modes: int) -> float:
        """sum_k (eta_k^n)^2 + (eta~_k^n)^2, the tau-independent part of the modeling-error bound."""
        return float(np.sum(self.eta_k_n(n_modes) ** 2) + np.sum(self.eta_tilde_k_n(n_modes) ** 2))


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    Parameters of the continuous problem.

    Attributes:
        alpha: Time order, 3/2 < alpha < 2
        beta: Space order, 1/2 < beta <= 1
        nu: Tempering rate, nu >= 0
        hurst: Hurst index of the fractional noise, 1/2 < H < 1
        domain_len: L, the domain is (0, L)
        horizon: Final time T
        n_modes: Spectral truncation K
        init_a: Modal coefficients of u(0)
        init_b: Modal coefficients of du/dt(0)
        f_spec: Drift nonlinearity
        g_spec: White-noise operator
        h_spec: Fractional-noise operator
        noise_coeffs: sigma_k, rho_k and their approximations
        gamma_reg: Declared regularity index gamma of f, g, h (report metadata)
    """
    alpha: float
    beta: float
    nu: float
    hurst: float
    domain_len: float
    horizon: float
    n_modes: int
    init_a: np.ndarray
    init_b: np.ndarray
    f_spec: NonlinearitySpec = field(default_factory=NonlinearitySpec.zero)
    g_spec: NonlinearitySpec = field(default_factory=NonlinearitySpec.zero)
    h_spec: NonlinearitySpec = field(default_factory=NonlinearitySpec.zero)
    noise_coeffs: CoeffSequences = field(default_factory=CoeffSequences)
    gamma_reg: float = 0.5

    def __post_init__(self):
        checks = [
            (1.5 < self.alpha < 2.0, f"3/2 < alpha < 2 (got alpha={self.alpha})"),
            (0.5 < self.beta <= 1.0, f"1/2 < beta <= 1 (got beta={self.beta})"),
            (self.nu >= 0.0, f"nu >= 0 (got nu={self.nu})"),
            (0.5 < self.hurst < 1.0, f"1/2 < hurst < 1 (got hurst={self.hurst})"),
            (self.domain_len > 0.0, f"domain_len > 0 (got {self.domain_len})"),
            (self.horizon > 0.0, f"horizon > 0 (got {self.horizon})"),
            (self.n_modes >= 1, f"n_modes >= 1 (got {self.n_modes})"),
        ]
        for ok, message in checks:
            if not ok:
                raise ModelValidationError(message)
        a = _frozen(self.init_a)
        b = _frozen(self.init_b)
        if a.shape != (self.n_modes,) or b.shape != (self.n_modes,):
            raise ModelValidationError(f"init vectors have length K={self.n_modes}")
        object.__setattr__(self, "init_a", a)
        object.__setattr__(self, "init_b", b)
        for name in ("g_spec", "h_spec"):
            spec = getattr(self, name)
            if spec.kind == NonlinearityKind.DENSE and spec.matrix.shape != (self.n_modes, self.n_modes):
                raise ModelValidationError(f"{name} dense matrix is K x K")
        if self.f_spec.kind == NonlinearityKind.DENSE:
            raise ModelValidationError("f is a drift; dense kind applies to g and h only")
        for name in ("f_spec", "g_spec", "h_spec"):
            getattr(self, name).check_growth(self.n_modes, name)

    @property
    def lambdas(self) -> np.ndarray:
        return eigenvalues(self.n_modes, self.domain_len)

    @property
    def lam_beta(self) -> np.ndarray:
        return self.lambdas ** self.beta

    @property
    def is_linear_homogeneous(self) -> bool:
        return self.f_spec.is_zero and self.g_spec.is_zero and self.h_spec.is_zero

    def gamma_tilde_candidates(self) -> Tuple[float, float]:
        """(max(gamma, beta/alpha), max(gamma, 2 beta/alpha))."""
        return (max(self.gamma_reg, self.beta / self.alpha), max(self.gamma_reg, 2.0 * self.beta / self.alpha))

    def with_modes(self, n_modes: int) -> "ModelSpec":
        """Same model truncated or zero-padded to n_modes."""
        def resize(v: np.ndarray) -> np.ndarray:
            out = np.zeros(n_modes)
            m = min(n_modes, v.size)
            out[:m] = v[:m]
            return out
        return replace(self, n_modes=n_modes, init_a=resize(self.init_a), init_b=resize(self.init_b))

    def updated(self, **changes) -> "ModelSpec":
        return replace(self, **changes)

    @staticmethod
    def benchmark(n_modes: int = 32) -> "ModelSpec":
        """
        Default benchmark: alpha=1.8, beta=0.9, nu=1, H=0.75, L=T=1,
        a(x)=x(1-x), b=0, f = sin(u), g = h = diag(1 + u / sqrt(1 + u^2)),
        sigma_k = rho_k = e^{-k}. The constants l of g and h are derived from K.
        """
        return ModelSpec(
            alpha=1.8,
            beta=0.9,
            nu=1.0,
            hurst=0.75,
            domain_len=1.0,
            horizon=1.0,
            n_modes=n_modes,
            init_a=parabola_coefficients(n_modes, 1.0),
            init_b=np.zeros(n_modes),
            f_spec=NonlinearitySpec.sine_bounded(1.0),
            g_spec=NonlinearitySpec.diagonal_multiplicative(c0=1.0, c1=1.0),
            h_spec=NonlinearitySpec.diagonal_multiplicative(c0=1.0, c1=1.0),
            noise_coeffs=CoeffSequences(),
            gamma_reg=0.5,
        )
