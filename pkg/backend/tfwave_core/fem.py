"""
Piecewise-linear Galerkin FEM for the spectral fractional Laplacian in 1-D.

The fractional stiffness matrix is the (-Delta)^{beta/2} energy form restricted
to hat functions, assembled spectrally:

    K[a, b] = sum_j lambda_j^beta (psi_a, phi_j)(psi_b, phi_j)

The hat-sine products are known in closed form. Beyond the truncation J the
summand is a periodic factor (period 2(M+1) in j) times j^{2 beta - 4}, so the
tail is summed exactly with the Hurwitz zeta function.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import linalg, special as sp

from app.core.config import settings

from .errors import GridMismatchError, ModelValidationError
from .kernels import KernelTable
from .model import ModelSpec, eigenvalues
from .noise import NoisePath
from .solver import ModalTrajectory, build_forcing, check_grid, march

logger = logging.getLogger(__name__)


def hat_sine_products(n_modes: int, h_bar: float, domain_len: float) -> np.ndarray:
    """P[a, j] = (psi_a, phi_j) for interior hats a = 1..M and modes j = 1..n_modes."""
    m_dim = int(round(domain_len / h_bar)) - 1
    x = h_bar * np.arange(1, m_dim + 1)
    omega = math.pi * np.arange(1, n_modes + 1) / domain_len
    factor = 2.0 * (1.0 - np.cos(omega * h_bar)) / (omega ** 2 * h_bar)
    return math.sqrt(2.0 / domain_len) * np.sin(np.outer(x, omega)) * factor[None, :]


def mass_matrix(m_dim: int, h_bar: float) -> np.ndarray:
    """P1 mass matrix h [1/6, 2/3, 1/6]."""
    return h_bar * (
        np.diag(np.full(m_dim, 2.0 / 3.0))
        + np.diag(np.full(m_dim - 1, 1.0 / 6.0), 1)
        + np.diag(np.full(m_dim - 1, 1.0 / 6.0), -1)
    )


def _stiffness_tail(m_dim: int, h_bar: float, domain_len: float, beta: float, truncation: int) -> np.ndarray:
    """Exact sum over j > J (J a multiple of 2(M+1)) of lambda_j^beta P[a, j] P[b, j]."""
    period = 2 * (m_dim + 1)
    blocks = truncation // period
    r = np.arange(1, period + 1, dtype=float)
    a = np.arange(1, m_dim + 1, dtype=float)
    shape = np.sin(np.outer(a, r) * math.pi / (m_dim + 1)) * (1.0 - np.cos(r * math.pi / (m_dim + 1)))[None, :]
    s = 4.0 - 2.0 * beta
    zeta = sp.zeta(s, blocks + r / period) * float(period) ** (-s)
    scale = (2.0 / domain_len) * (4.0 / h_bar ** 2) * (math.pi / domain_len) ** (2.0 * beta - 4.0)
    return scale * (shape * zeta[None, :]) @ shape.T


class FemSpace:
    """
    P1 finite element space on a uniform mesh of (0, L).

    Attributes:
        h_bar: Mesh size
        domain_len: L
        beta: Fractional order of the stiffness form
        M_dim: Number of interior nodes
        nodes: Interior node coordinates
        mass: M x M mass matrix
        frac_stiff: M x M fractional stiffness matrix
        eig_vals: Discrete eigenvalues lambda_k^{h,beta}, ascending
        eig_vecs: Mass-orthonormal nodal eigenvectors (columns)
        spectral_trunc: J
        tail_corrected: Whether the j > J tail was added
    """

    def __init__(
        self,
        h_bar: float,
        domain_len: float,
        beta: float,
        spectral_trunc: int,
        tail_correction: bool = True,
    ):
        self.h_bar = float(h_bar)
        self.domain_len = float(domain_len)
        self.beta = float(beta)
        self._validate()
        self.M_dim = int(round(self.domain_len / self.h_bar)) - 1
        self.nodes = self.h_bar * np.arange(1, self.M_dim + 1)
        period = 2 * (self.M_dim + 1)
        self.spectral_trunc = int(math.ceil(spectral_trunc / period) * period)
        self.tail_corrected = tail_correction
        self._prolongations: Dict[int, np.ndarray] = {}

        self.mass = mass_matrix(self.M_dim, self.h_bar)
        products = self.hat_sine(self.spectral_trunc)
        lam_beta = eigenvalues(self.spectral_trunc, self.domain_len) ** self.beta
        stiff = (products * lam_beta[None, :]) @ products.T
        tail = _stiffness_tail(self.M_dim, self.h_bar, self.domain_len, self.beta, self.spectral_trunc)
        relative_tail = float(np.max(np.abs(np.diag(tail))) / np.max(np.abs(np.diag(stiff))))
        if tail_correction:
            stiff = stiff + tail
        elif relative_tail > settings.FEM_TAIL_WARN_REL:
            logger.warning(
                f"spectral truncation J={self.spectral_trunc} leaves relative tail {relative_tail:.2e} "
                f"(h={self.h_bar}, beta={self.beta})"
            )
        self.frac_stiff = 0.5 * (stiff + stiff.T)
        self.eig_vals, self.eig_vecs = linalg.eigh(self.frac_stiff, self.mass)
        logger.debug(
            f"FEM space M={self.M_dim} J={self.spectral_trunc} beta={self.beta}: "
            f"lambda_1={self.eig_vals[0]:.6e}, tail={relative_tail:.2e}"
        )

    def _validate(self) -> None:
        cells = self.domain_len / self.h_bar
        if abs(cells - round(cells)) > 1e-9 or round(cells) < 2:
            raise ModelValidationError(f"L / h_bar is an integer >= 2 (got {cells})")
        if not 0.0 < self.beta <= 1.0:
            raise ModelValidationError(f"0 < beta <= 1 (got {self.beta})")

    def hat_sine(self, n_modes: int) -> np.ndarray:
        return hat_sine_products(n_modes, self.h_bar, self.domain_len)

    def prolongation(self, n_modes: int) -> np.ndarray:
        """Q[k, j] = (phi_k^h, phi_j): discrete eigenbasis -> first n_modes continuous modes."""
        if n_modes not in self._prolongations:
            q = self.eig_vecs.T @ self.hat_sine(n_modes)
            q.setflags(write=False)
            self._prolongations[n_modes] = q
        return self._prolongations[n_modes]

    def discrete_coefficients(self, nodal: np.ndarray) -> np.ndarray:
        """(x, phi_k^h) in the mass inner product."""
        return self.eig_vecs.T @ (self.mass @ nodal)


def build_space(
    h_bar: float,
    domain_len: float,
    beta: float,
    spectral_trunc: Optional[int] = None,
    tail_correction: bool = True,
) -> FemSpace:
    """
    Assemble the P1 space with spectral fractional stiffness.

    Args:
        h_bar: Mesh size; L / h_bar integer >= 2
        domain_len: L
        beta: Fractional order
        spectral_trunc: J >= 4M; defaults to max(4M, FEM_MIN_TRUNCATION)
        tail_correction: Add the exact j > J tail

    Returns:
        FemSpace
    """
    m_dim = int(round(domain_len / h_bar)) - 1
    if spectral_trunc is None:
        spectral_trunc = max(4 * m_dim, settings.FEM_MIN_TRUNCATION)
    if spectral_trunc < 4 * m_dim:
        raise ModelValidationError(f"J >= 4M (got J={spectral_trunc}, M={m_dim})")
    return FemSpace(h_bar, domain_len, beta, spectral_trunc, tail_correction)


def project_L2(space: FemSpace, target: np.ndarray) -> np.ndarray:
    """Nodal vector of P_h psi for psi given by continuous modal coefficients."""
    target = np.asarray(target, dtype=float)
    load = space.hat_sine(target.size) @ target
    banded = np.vstack([
        np.concatenate([[0.0], np.diag(space.mass, 1)]),
        np.diag(space.mass),
    ])
    return linalg.solveh_banded(banded, load)


def project_ritz(space: FemSpace, target: np.ndarray) -> np.ndarray:
    """Nodal vector of R_h psi: energy-orthogonal projection in the (-Delta)^{beta/2} inner product."""
    target = np.asarray(target, dtype=float)
    lam_beta = eigenvalues(target.size, space.domain_len) ** space.beta
    load = space.hat_sine(target.size) @ (lam_beta * target)
    return linalg.solve(space.frac_stiff, load, assume_a="pos")


def l2_distance_sq(space: FemSpace, nodal: np.ndarray, target: np.ndarray) -> float:
    """||x_h - psi||^2 from the mass matrix and the hat-sine load."""
    target = np.asarray(target, dtype=float)
    load = space.hat_sine(target.size) @ target
    return float(target @ target - 2.0 * nodal @ load + nodal @ space.mass @ nodal)


def discrete_norm(space: FemSpace, x: np.ndarray, p: float) -> float:
    """|||x|||_p = sqrt(sum_k (lambda_k^{h,beta})^{p/beta} (x, phi_k^h)^2)."""
    coeffs = space.discrete_coefficients(np.asarray(x, dtype=float))
    return float(np.sqrt(np.sum(space.eig_vals ** (p / space.beta) * coeffs ** 2)))


def inverse_inequality_probe(space: FemSpace, p_low: float, p_high: float) -> float:
    """max_k |||phi_k^h|||_l / (h^{s-l} |||phi_k^h|||_s) with s = p_low, l = p_high."""
    if p_high < p_low:
        raise ModelValidationError(f"p_high >= p_low (got {p_high} < {p_low})")
    exponent = (p_high - p_low) / (2.0 * space.beta)
    ratios = space.eig_vals ** exponent * space.h_bar ** (p_high - p_low)
    return float(ratios.max())


def _check_compatible(model: ModelSpec, space: FemSpace) -> None:
    if not math.isclose(model.domain_len, space.domain_len) or not math.isclose(model.beta, space.beta):
        raise GridMismatchError("model and FEM space disagree on L or beta")


def solve_fem_batch(
    model: ModelSpec,
    space: FemSpace,
    paths: Sequence[NoisePath],
    *,
    table: Optional[KernelTable] = None,
    exact_coefficients: bool = False,
    max_steps: Optional[int] = None,
) -> List[ModalTrajectory]:
    """
    Fully discrete solution in the discrete eigenbasis for a batch of paths.

    Initial data are the L2 projections of a and b; nonlinearity images are
    formed in the first K continuous modes and projected back onto S_h.
    """
    _check_compatible(model, space)
    check_grid(model, paths, max_steps)
    tau, n_steps = paths[0].tau, paths[0].n_steps
    if table is None:
        table = KernelTable(space.eig_vals, model.alpha, tau, n_steps)
    q = space.prolongation(model.n_modes)
    a_h = q @ model.init_a
    b_h = q @ model.init_b
    hom = table.homogeneous(a_h, b_h, model.nu)
    forcing = build_forcing(model, paths, exact_coefficients=exact_coefficients, prolong=q)
    u = march(table, hom, model.nu, forcing, len(paths))
    return [
        ModalTrajectory(tau, n_steps, u[:, s, :], model, seed=p.seed, sample_index=p.sample_index, space=space)
        for s, p in enumerate(paths)
    ]


def solve_fem(
    model: ModelSpec,
    space: FemSpace,
    path: NoisePath,
    *,
    table: Optional[KernelTable] = None,
    exact_coefficients: bool = False,
    max_steps: Optional[int] = None,
) -> ModalTrajectory:
    """Fully discrete solution on one noise path."""
    return solve_fem_batch(
        model, space, [path], table=table, exact_coefficients=exact_coefficients, max_steps=max_steps
    )[0]


def dump_matrices(space: FemSpace, directory: Union[str, Path]) -> List[Path]:
    """Write mass, stiffness, eigenvalues and eigenvectors as row-major text files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in (
        ("mass", space.mass),
        ("frac_stiff", space.frac_stiff),
        ("eig_vals", space.eig_vals[None, :]),
        ("eig_vecs", space.eig_vecs),
    ):
        target = directory / f"{name}.txt"
        np.savetxt(target, data, fmt="%.17e")
        written.append(target)
    return written
