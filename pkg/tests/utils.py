import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import json
from pathlib import Path
import numpy as np
from scipy.linalg import solve_banded

from src.schemas.microstructure import MicrostructureModel
from src.schemas.material import PhaseMaterialEntry
from src.models.material import MaterialTable
from src.services.material import MaterialService
from src.utils.voigt import in_plane_voigt3_of_voigt6, out_of_plane_voigt6
from src.core.traceback import traceBack

def materials(*moduli: tuple[int, float, float]) -> MaterialTable:
    """materials((phase_id, mu, lambda), ...)"""
    return MaterialService.material_table(
        [PhaseMaterialEntry(phase_id=p, mu=mu, lame_lambda=lam) for p, mu, lam in moduli]
    )

def texture(fractions: dict[int, float], period: float = 1.0, axis: int = 0) -> MicrostructureModel:
    return MicrostructureModel.model_validate({
        "kind": "periodic_texture", "period_hint": period, "phase_count": len(fractions), "stripe_axis": axis,
        "mark_distribution": [{"phase_id": p, "probability": q} for p, q in fractions.items()],
    })

def checkerboard(period: float, ids: tuple[int, int] = (1, 2)) -> MicrostructureModel:
    return MicrostructureModel.model_validate({
        "kind": "checkerboard", "period_hint": period, "phase_count": 2,
        "mark_distribution": [{"phase_id": ids[0], "probability": 0.5}, {"phase_id": ids[1], "probability": 0.5}],
    })

def voronoi(intensity: float, fractions: dict[int, float]) -> MicrostructureModel:
    return MicrostructureModel.model_validate({
        "kind": "poisson_voronoi", "intensity": intensity, "phase_count": len(fractions),
        "mark_distribution": [{"phase_id": p, "probability": q} for p, q in fractions.items()],
    })

def random_symmetric(rng: np.random.Generator, size: int = 2) -> np.ndarray:
    A = rng.standard_normal((size, size))
    return 0.5 * (A + A.T)

def random_rotation(rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q

def homogeneous_plate_voigt3(mu: float, lam: float) -> np.ndarray:
    """(1/12) [2 mu |G|^2 + (2 mu lam / (2 mu + lam)) (tr G)^2] in Voigt form."""
    m = np.array([1.0, 1.0, 0.0])
    return (2 * mu * np.eye(3) + 2 * mu * lam / (2 * mu + lam) * np.outer(m, m)) / 12

def homogeneous_plate_discrete(mu: float, lam: float, n3: int) -> np.ndarray:
    """The homogeneous plate on n3 linear layers: the x3-quadratic normal corrector is resolved layerwise."""
    m = np.array([1.0, 1.0, 0.0])
    return homogeneous_plate_voigt3(mu, lam) + lam ** 2 / (2 * mu + lam) / (12 * n3 ** 2) * np.outer(m, m)

def laminate_thick_limit(phases: list[tuple[float, float, float]]) -> np.ndarray:
    """Bending form of a stripe laminate (normal e1) much thinner than the plate is thick.

    phases: (volume fraction, mu, lambda). The 3D laminate tensor is reduced by
    minimizing over the out-of-plane strains, then integrated against x3^2.
    """
    normal, tangential = np.array([0, 4, 5]), np.array([1, 2, 3])
    inv_nn, inv_nn_nt, schur_tt, tn_inv_nn = np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3))
    for fraction, mu, lam in phases:
        C = MaterialService.isotropic_form(mu, lam).voigt
        Cnn, Cnt = C[np.ix_(normal, normal)], C[np.ix_(normal, tangential)]
        Ctn, Ctt = C[np.ix_(tangential, normal)], C[np.ix_(tangential, tangential)]
        Cnn_inv = np.linalg.inv(Cnn)
        inv_nn += fraction * Cnn_inv
        inv_nn_nt += fraction * Cnn_inv @ Cnt
        tn_inv_nn += fraction * Ctn @ Cnn_inv
        schur_tt += fraction * (Ctt - Ctn @ Cnn_inv @ Cnt)

    star_nn = np.linalg.inv(inv_nn)
    effective = np.zeros((6, 6))
    effective[np.ix_(normal, normal)] = star_nn
    effective[np.ix_(normal, tangential)] = star_nn @ inv_nn_nt
    effective[np.ix_(tangential, normal)] = (star_nn @ inv_nn_nt).T
    effective[np.ix_(tangential, tangential)] = schur_tt + tn_inv_nn @ star_nn @ inv_nn_nt

    inside, outside = in_plane_voigt3_of_voigt6(), out_of_plane_voigt6()
    A = effective[np.ix_(inside, inside)]
    B = effective[np.ix_(inside, outside)]
    C = effective[np.ix_(outside, outside)]
    return (A - B @ np.linalg.solve(C, B.T)) / 12

def write_config(path: Path, document: dict) -> Path:
    path.write_text(json.dumps(document), encoding="utf-8")
    traceBack(f"Config written to {path}")
    return path

def read_result(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))["result"]


def laminate_shear_profile(mu: np.ndarray, box_side: float, b12: float) -> np.ndarray:
    """Nodal phi_2 of a stripe laminate (normal e1) under the membrane shear B12 = B21 = b12.

    Element e joins nodes e and e + 1 and has shear modulus mu[e]. Each node balances
    mu (b12 + phi_2' / 2) across its two elements; the periodic system is made
    tridiagonal by pinning node 0, and the nodal mean is removed afterwards.
    """
    mu = np.asarray(mu, dtype=float)
    n, h = len(mu), box_side / len(mu)
    left = np.roll(mu, 1)
    rhs = 2 * h * b12 * (mu - left)

    banded = np.zeros((3, n - 1))
    banded[0, 1:] = -mu[1:-1]
    banded[1] = (left + mu)[1:]
    banded[2, :-1] = -left[2:]

    w = np.zeros(n)
    w[1:] = solve_banded((1, 1), banded, rhs[1:])
    return w - w.mean()
