"""Orthonormal Voigt coordinates.

Shear entries carry a factor sqrt(2) so that the Euclidean product of two
Voigt vectors equals the Frobenius product of the matrices they represent,
and a quadratic form is represented by a plain symmetric matrix.
"""
import numpy as np

SQRT2: float = float(np.sqrt(2.0))

# (row, col) of E11, E22, E33, sqrt2*E23, sqrt2*E13, sqrt2*E12
VOIGT6_INDEX: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
# (row, col) of G11, G22, sqrt2*G12
VOIGT3_INDEX: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (0, 1))

def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))

def to_voigt6(M: np.ndarray) -> np.ndarray:
    S = sym(np.asarray(M, dtype=float))
    return np.stack([S[..., 0, 0], S[..., 1, 1], S[..., 2, 2],
                     SQRT2 * S[..., 1, 2], SQRT2 * S[..., 0, 2], SQRT2 * S[..., 0, 1]], axis=-1)

def from_voigt6(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (3, 3))
    M[..., 0, 0], M[..., 1, 1], M[..., 2, 2] = v[..., 0], v[..., 1], v[..., 2]
    M[..., 1, 2] = M[..., 2, 1] = v[..., 3] / SQRT2
    M[..., 0, 2] = M[..., 2, 0] = v[..., 4] / SQRT2
    M[..., 0, 1] = M[..., 1, 0] = v[..., 5] / SQRT2
    return M

def to_voigt3(G: np.ndarray) -> np.ndarray:
    S = sym(np.asarray(G, dtype=float))
    return np.stack([S[..., 0, 0], S[..., 1, 1], SQRT2 * S[..., 0, 1]], axis=-1)

def from_voigt3(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    G = np.zeros(v.shape[:-1] + (2, 2))
    G[..., 0, 0], G[..., 1, 1] = v[..., 0], v[..., 1]
    G[..., 0, 1] = G[..., 1, 0] = v[..., 2] / SQRT2
    return G

def iota(G: np.ndarray) -> np.ndarray:
    """Natural inclusion of 2x2 matrices into the upper-left block of 3x3 matrices."""
    G = np.asarray(G, dtype=float)
    M = np.zeros(G.shape[:-2] + (3, 3))
    M[..., :2, :2] = G
    return M

def in_plane_voigt3_of_voigt6() -> np.ndarray:
    """Rows of the 6-vector that correspond to (G11, G22, sqrt2*G12)."""
    return np.array([0, 1, 5])

def out_of_plane_voigt6() -> np.ndarray:
    return np.array([2, 3, 4])
