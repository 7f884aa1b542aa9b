"""Structured trilinear hexahedra on the periodic in-plane box times [-1/2, 1/2].

Nodes are numbered node(i, j, k) = (i * n2 + j) * (n3 + 1) + k with i, j taken
modulo n1, n2 (no duplicated boundary nodes) and k = 0..n3 through the thickness.
Local node l of an element carries offsets (a, b, c) with l = 4a + 2b + c.
"""
import numpy as np

LOCAL_OFFSETS: np.ndarray = np.array([[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)])
GAUSS_1D: np.ndarray = np.array([-1.0, 1.0]) / np.sqrt(3.0)

def gauss_points_3d() -> np.ndarray:
    return np.array([[xi, eta, zeta] for xi in GAUSS_1D for eta in GAUSS_1D for zeta in GAUSS_1D])

def shape_functions(ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values (..., 8) and reference derivatives (..., 8, 3) at reference points (..., 3)."""
    ref = np.asarray(ref, dtype=float)
    signs = 2 * LOCAL_OFFSETS - 1
    factors = 1.0 + signs * ref[..., None, :]
    N = np.prod(factors, axis=-1) / 8.0

    dN = np.empty(ref.shape[:-1] + (8, 3))
    for d in range(3):
        others = [o for o in range(3) if o != d]
        dN[..., d] = signs[:, d] * factors[..., others[0]] * factors[..., others[1]] / 8.0

    return N, dN

def node_index(i: np.ndarray, j: np.ndarray, k: np.ndarray, n1: int, n2: int, n3: int) -> np.ndarray:
    return ((np.mod(i, n1) * n2 + np.mod(j, n2)) * (n3 + 1) + k).astype(np.int64)

def connectivity(n1: int, n2: int, n3: int) -> np.ndarray:
    """(n1 * n2 * n3, 8) node ids; element e = (i * n2 + j) * n3 + k."""
    i, j, k = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    return np.stack([node_index(i + a, j + b, k + c, n1, n2, n3) for a, b, c in LOCAL_OFFSETS], axis=1)

def edof(conn: np.ndarray, components: int = 3) -> np.ndarray:
    """Element dof matrix with dof = node * components + component, node-major."""
    return (conn[:, :, None] * components + np.arange(components)).reshape(conn.shape[0], -1)

def node_x3(n3: int) -> np.ndarray:
    return -0.5 + np.arange(n3 + 1) / n3

def element_x3(n3: int) -> np.ndarray:
    return -0.5 + (np.arange(n3) + 0.5) / n3

def periodic_trilinear(values: np.ndarray, box_side: float, y1: np.ndarray, y2: np.ndarray,
                       x3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolates a nodal field (n1, n2, n3 + 1, c) at points periodic in-plane.

    Returns the values (..., c) and the gradient (..., c, 3) with respect to
    (y1, y2, x3).
    """
    n1, n2, n_layers = values.shape[0], values.shape[1], values.shape[2] - 1
    h1, h2, h3 = box_side / n1, box_side / n2, 1.0 / n_layers

    s1 = np.mod(y1, box_side) / h1
    s2 = np.mod(y2, box_side) / h2
    s3 = (np.clip(x3, -0.5, 0.5) + 0.5) / h3
    i = np.minimum(np.floor(s1).astype(np.int64), n1 - 1)
    j = np.minimum(np.floor(s2).astype(np.int64), n2 - 1)
    k = np.minimum(np.floor(s3).astype(np.int64), n_layers - 1)
    ref = np.stack([2.0 * (s1 - i) - 1.0, 2.0 * (s2 - j) - 1.0, 2.0 * (s3 - k) - 1.0], axis=-1)
    N, dN = shape_functions(ref)

    corners = np.stack([values[np.mod(i + a, n1), np.mod(j + b, n2), k + c] for a, b, c in LOCAL_OFFSETS],
                       axis=-2)
    value = np.einsum("...l,...lc->...c", N, corners)
    scale = np.array([2.0 / h1, 2.0 / h2, 2.0 / h3])
    gradient = np.einsum("...ld,...lc->...cd", dN * scale, corners)
    return value, gradient
