"""Discrete Helmholtz-type splittings.

The mixed split lives on the corrector grid (periodic in-plane, free through
the thickness) and uses nodal finite differences; the second-order split lives
on the periodic 2D grid and is spectral.
"""
from functools import lru_cache
from typing import Callable, Literal
import numpy as np
import scipy.sparse as sp
from scipy import fft
from scipy.sparse.linalg import cg

from src.models.cell import RVEGrid, SolveHistory
from src.models.decomposition import MixedField, MixedDecomposition, SymField2D, SecondOrderDecomposition
from src.services.microstructure import stream_generator
from src.utils.fem import node_x3
from src.core.config import settings
from src.core.exceptions import bad_config, cg_not_converged, decomposition_failed
from src.core.traceback import traceBack

def periodic_difference(n: int, h: float) -> sp.csr_matrix:
    rows = np.arange(n)
    values = np.r_[np.full(n, 0.5 / h), np.full(n, -0.5 / h)]
    # coo sums the coincident entries of n = 2
    return sp.coo_matrix((values, (np.r_[rows, rows], np.r_[(rows + 1) % n, (rows - 1) % n])), shape=(n, n)).tocsr()

def interval_difference(n: int, h: float) -> sp.csr_matrix:
    """Centred differences inside, second-order one-sided at both ends."""
    D = sp.lil_matrix((n, n))
    D[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D[n - 1, n - 3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    for k in range(1, n - 1):
        D[k, k - 1], D[k, k + 1] = -0.5 / h, 0.5 / h
    return D.tocsr()

@lru_cache(maxsize=16)
def difference_operators(grid: RVEGrid) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    h1, h2, h3 = grid.spacing
    I1, I2, I3 = sp.identity(grid.n1), sp.identity(grid.n2), sp.identity(grid.n3 + 1)
    return (sp.kron(sp.kron(periodic_difference(grid.n1, h1), I2), I3).tocsr(),
            sp.kron(sp.kron(I1, periodic_difference(grid.n2, h2)), I3).tocsr(),
            sp.kron(sp.kron(I1, I2), interval_difference(grid.n3 + 1, h3)).tocsr())

@lru_cache(maxsize=16)
def node_weights(grid: RVEGrid) -> np.ndarray:
    """Quadrature weights summing to the cell volume L^2; trapezoid through the thickness."""
    h1, h2, h3 = grid.spacing
    thickness = np.full(grid.n3 + 1, h3)
    thickness[[0, -1]] *= 0.5
    return np.broadcast_to(h1 * h2 * thickness, grid.field_shape).ravel().copy()

def inner(a: MixedField, b: MixedField) -> float:
    weights = node_weights(a.grid)
    return float(np.sum(weights[:, None] * a.values.reshape(-1, 3) * b.values.reshape(-1, 3)))

def discrete_gradient(psi: np.ndarray, grid: RVEGrid) -> MixedField:
    psi = np.asarray(psi, dtype=float).ravel()
    return MixedField(grid=grid, values=np.stack([D @ psi for D in difference_operators(grid)], axis=-1)
                      .reshape(grid.field_shape + (3,)))

def spectral_wavenumbers(n1: int, n2: int, box_side: float) -> tuple[np.ndarray, np.ndarray]:
    k1 = 2 * np.pi * fft.fftfreq(n1, d=box_side / n1)
    k2 = 2 * np.pi * fft.fftfreq(n2, d=box_side / n2)
    # Nyquist modes have no real derivative
    if n1 % 2 == 0:
        k1[n1 // 2] = 0.0
    if n2 % 2 == 0:
        k2[n2 // 2] = 0.0
    return np.meshgrid(k1, k2, indexing="ij")

def nyquist_mask(n1: int, n2: int) -> np.ndarray:
    mask = np.zeros((n1, n2), dtype=bool)
    if n1 % 2 == 0:
        mask[n1 // 2, :] = True
    if n2 % 2 == 0:
        mask[:, n2 // 2] = True
    return mask

def symmetric_from_entries(a11: np.ndarray, a22: np.ndarray, a12: np.ndarray) -> np.ndarray:
    values = np.empty(a11.shape + (2, 2))
    values[..., 0, 0], values[..., 1, 1] = a11, a22
    values[..., 0, 1] = values[..., 1, 0] = a12
    return values

def cofactor(M: np.ndarray) -> np.ndarray:
    C = np.empty_like(M)
    C[..., 0, 0], C[..., 1, 1] = M[..., 1, 1], M[..., 0, 0]
    C[..., 0, 1], C[..., 1, 0] = -M[..., 1, 0], -M[..., 0, 1]
    return C

def finite_difference(b: Callable[[np.ndarray], np.ndarray], x: np.ndarray, axis: int, h: float,
                      method: Literal["fd2", "fd4"]) -> np.ndarray:
    step = np.zeros(2)
    step[axis] = h
    if method == "fd2":
        return (b(x + step) - b(x - step)) / (2 * h)
    return (-b(x + 2 * step) + 8 * b(x + step) - 8 * b(x - step) + b(x - 2 * step)) / (12 * h)

# clear of the Voronoi streams 3a .. 3a + 2
FIELD_STREAM: int = 1 << 20

# right-hand sides below this fraction of their absolute-value bound are cancellation noise
ROUNDOFF: float = 64 * float(np.finfo(float).eps)

TEST_MODES: tuple[tuple[int, int], ...] = tuple((m1, m2) for m1 in range(-2, 3) for m2 in range(3) if m2 > 0 or m1 > 0)

def band_limited_mixed_field(grid: RVEGrid, seed: int, modes: int = 3) -> MixedField:
    """Seeded trigonometric field with in-plane wavenumbers up to modes and quadratic x3 profiles."""
    rng = stream_generator(seed, FIELD_STREAM)
    h1, h2, _ = grid.spacing
    x1 = np.arange(grid.n1) * h1
    x2 = np.arange(grid.n2) * h2
    x3 = node_x3(grid.n3)
    X1, X2, X3 = np.meshgrid(x1, x2, x3, indexing="ij")

    values = np.zeros(grid.field_shape + (3,))
    wave = 2 * np.pi / grid.box_side
    for m1 in range(-modes, modes + 1):
        for m2 in range(-modes, modes + 1):
            amplitude = rng.standard_normal((3, 3)) / (1.0 + m1 * m1 + m2 * m2)
            shift = rng.uniform(0.0, 2 * np.pi, size=3)
            for c in range(3):
                profile = amplitude[c, 0] + amplitude[c, 1] * X3 + amplitude[c, 2] * X3 ** 2
                values[..., c] += profile * np.cos(wave * (m1 * X1 + m2 * X2) + shift[c])
    return MixedField(grid=grid, values=values)

def band_limited_sym_field(n1: int, n2: int, box_side: float, seed: int, modes: int = 3) -> SymField2D:
    rng = stream_generator(seed, FIELD_STREAM + 1)
    x1 = np.arange(n1) * box_side / n1
    x2 = np.arange(n2) * box_side / n2
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")

    entries = np.zeros((3, n1, n2))
    wave = 2 * np.pi / box_side
    for m1 in range(-modes, modes + 1):
        for m2 in range(-modes, modes + 1):
            amplitude = rng.standard_normal(3) / (1.0 + m1 * m1 + m2 * m2)
            shift = rng.uniform(0.0, 2 * np.pi, size=3)
            entries += amplitude[:, None, None] * np.cos(wave * (m1 * X1 + m2 * X2) + shift[:, None, None])
    return SymField2D(box_side=box_side, values=symmetric_from_entries(*entries))

class DecompositionService:
    @staticmethod
    def decompose_mixed(f: MixedField, tol: float = settings.DECOMPOSITION_TOL,
                        maxiter: int | None = None) -> MixedDecomposition:
        if tol <= 0:
            raise bad_config(f"decomposition tolerance must be positive, got {tol}")

        grid = f.grid
        weights = node_weights(grid)
        volume = float(weights.sum())
        components = f.components()
        mean = components @ weights / volume

        operators = difference_operators(grid)
        centred = components - mean[:, None]
        rhs = sum(D.T @ (weights * g) for D, g in zip(operators, centred))
        rhs_norm = float(np.linalg.norm(rhs))
        bound = float(np.linalg.norm(sum(abs(D).T @ (weights * np.abs(g)) for D, g in zip(operators, centred))))

        residuals: list[float] = []
        if rhs_norm <= ROUNDOFF * bound:
            psi = np.zeros(grid.node_count)
        else:
            normal = sum(D.T @ sp.diags(weights) @ D for D in operators).tocsr()
            preconditioner = sp.diags(1.0 / normal.diagonal())

            def record(x: np.ndarray) -> None:
                residuals.append(float(np.linalg.norm(rhs - normal @ x) / rhs_norm))

            cap = maxiter or 20 * grid.node_count
            psi, info = cg(normal, rhs, rtol=tol, atol=0.0, maxiter=cap, M=preconditioner, callback=record)
            if info != 0:
                raise cg_not_converged(residuals, cap)
            psi = psi - psi.mean()

        potential = discrete_gradient(psi, grid)
        solenoidal = MixedField(grid=grid, values=f.values - mean - potential.values)
        history = SolveHistory(residuals=tuple(residuals), iterations=len(residuals))
        return MixedDecomposition(source=f, potential=potential, solenoidal=solenoidal, mean=mean,
                                  psi=psi.reshape(grid.field_shape), history=history)

    @staticmethod
    def orthogonality_report(d: MixedDecomposition) -> tuple[float, float, float]:
        """Normalized inner products (pot.sol, pot.mean, sol.mean)."""
        norm = inner(d.source, d.source)
        if norm == 0.0:
            return 0.0, 0.0, 0.0

        mean = MixedField.constant(d.source.grid, d.mean)
        return (abs(inner(d.potential, d.solenoidal)) / norm,
                abs(inner(d.potential, mean)) / norm,
                abs(inner(d.solenoidal, mean)) / norm)

    @staticmethod
    def curl_field(psi: np.ndarray, grid: RVEGrid) -> MixedField:
        """(-d2 psi, d1 psi, 0) for an x3-independent nodal potential psi (n1, n2)."""
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (grid.n1, grid.n2):
            raise bad_config(f"curl potential must have shape {(grid.n1, grid.n2)}, got {psi.shape}")

        nodal = np.repeat(psi[..., None], grid.n3 + 1, axis=-1).ravel()
        D1, D2, _ = difference_operators(grid)
        values = np.stack([-(D2 @ nodal), D1 @ nodal, np.zeros(grid.node_count)], axis=-1)
        return MixedField(grid=grid, values=values.reshape(grid.field_shape + (3,)))

    @staticmethod
    def decompose_second_order_2d(A: SymField2D, tol: float = settings.DECOMPOSITION_TOL) -> SecondOrderDecomposition:
        if tol <= 0:
            raise bad_config(f"decomposition tolerance must be positive, got {tol}")

        n1, n2 = A.shape
        k1, k2 = spectral_wavenumbers(n1, n2, A.box_side)
        k4 = (k1 ** 2 + k2 ** 2) ** 2
        k4[k4 == 0.0] = 1.0

        A_hat = fft.fftn(A.values, axes=(0, 1))
        mean = np.real(A_hat[0, 0]) / (n1 * n2)
        psi_hat = -(k1 ** 2 * A_hat[..., 0, 0] + 2 * k1 * k2 * A_hat[..., 0, 1] + k2 ** 2 * A_hat[..., 1, 1]) / k4
        psi_hat[0, 0] = 0.0
        psi_hat[nyquist_mask(n1, n2)] = 0.0

        def back(hat: np.ndarray) -> np.ndarray:
            return np.real(fft.ifftn(hat, axes=(0, 1)))

        hessian = symmetric_from_entries(back(-k1 * k1 * psi_hat), back(-k2 * k2 * psi_hat), back(-k1 * k2 * psi_hat))
        remainder = A.values - mean - hessian
        remainder[..., 1, 0] = remainder[..., 0, 1]

        scale = float(np.sum((A.values - mean) ** 2))
        residual = abs(float(np.sum(hessian * remainder))) / scale if scale > 0 else 0.0
        if residual > tol:
            raise decomposition_failed(residual, tol)

        traceBack(f"Second-order split on {n1}x{n2}, orthogonality residual {residual:.2e}")
        return SecondOrderDecomposition(hessian=SymField2D(box_side=A.box_side, values=hessian),
                                        remainder=SymField2D(box_side=A.box_side, values=remainder),
                                        mean=mean, psi=back(psi_hat), orthogonality=residual)

    @staticmethod
    def cof_sym_gradient(b_hat: np.ndarray, box_side: float) -> SymField2D:
        """cof sym grad b of a periodic field given by its Fourier coefficients (n1, n2, 2)."""
        n1, n2 = b_hat.shape[:2]
        k1, k2 = spectral_wavenumbers(n1, n2, box_side)

        def back(hat: np.ndarray) -> np.ndarray:
            return np.real(fft.ifftn(hat, axes=(0, 1)))

        d11 = back(1j * k1 * b_hat[..., 0])
        d22 = back(1j * k2 * b_hat[..., 1])
        d12 = 0.5 * (back(1j * k2 * b_hat[..., 0]) + back(1j * k1 * b_hat[..., 1]))
        return SymField2D(box_side=box_side, values=cofactor(symmetric_from_entries(d11, d22, d12)))

    @staticmethod
    def div_cof_residual(b: Callable[[np.ndarray], np.ndarray], n: int, box_side: float = 1.0,
                         method: Literal["fd2", "fd4"] = "fd2") -> float:
        """Norm of div(cof grad b) tested against low Fourier modes, grad b by finite differences.

        b maps points (..., 2) to vectors (..., 2) and must be box_side-periodic.
        """
        if n < 2:
            raise bad_config(f"grid size must be at least 2, got {n}")

        h = box_side / n
        axis = (np.arange(n) + 0.5) * h
        x = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
        gradient = np.stack([finite_difference(b, x, j, h, method) for j in range(2)], axis=-1)
        cof = cofactor(gradient)

        pairings = []
        for m in TEST_MODES:
            k = 2 * np.pi * np.asarray(m, dtype=float) / box_side
            phase = x @ k
            for slope in (-np.sin(phase), np.cos(phase)):
                # <div cof grad b, wave e_c> = -int cof_cj d_j wave
                pairings.extend(-np.einsum("abcj,abj->c", cof, slope[..., None] * k) * h * h)

        return float(np.linalg.norm(pairings))
