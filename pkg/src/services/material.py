from typing import Any, Iterable
import numpy as np

from src.schemas.material import PhaseMaterialEntry
from src.models.material import QuadraticFormQ0, PhaseMaterial, MaterialTable
from src.utils.voigt import to_voigt6
from src.core.exceptions import invalid_material, bad_config

SYMMETRY_TOLERANCE: float = 1e-12
NORMAL_AXES: np.ndarray = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

def dist_to_so3(F: np.ndarray) -> np.ndarray:
    """Frobenius distance of F (..., 3, 3) to SO(3), via the polar factor."""
    U, s, Vt = np.linalg.svd(np.asarray(F, dtype=float))
    # flip the weakest direction when det F < 0 so the nearest rotation is proper
    s = s.copy()
    s[..., 2] *= np.sign(np.linalg.det(U @ Vt))
    return np.sqrt(np.sum((s - 1.0) ** 2, axis=-1))

class MaterialService:
    @staticmethod
    def isotropic_form(mu: float, lame_lambda: float) -> QuadraticFormQ0:
        if mu <= 0:
            raise invalid_material(f"shear modulus must be positive, got mu={mu}")
        if lame_lambda < 0:
            raise invalid_material(f"first Lame parameter must be nonnegative, got lambda={lame_lambda}")

        return QuadraticFormQ0(voigt=2.0 * mu * np.eye(6) + lame_lambda * np.outer(NORMAL_AXES, NORMAL_AXES))

    @staticmethod
    def q0_apply(q: QuadraticFormQ0, M: np.ndarray) -> np.ndarray:
        """v^T C v with v the Voigt vector of sym M; accepts batches (..., 3, 3)."""
        v = to_voigt6(M)
        return np.einsum("...i,ij,...j->...", v, q.voigt, v)

    @staticmethod
    def svk_density(mu: np.ndarray | float, lame_lambda: np.ndarray | float, F: np.ndarray) -> np.ndarray:
        """(mu/2)|F^T F - I|^2 + (lambda/4)(tr(F^T F - I))^2, broadcasting the moduli against F (..., 3, 3)."""
        F = np.asarray(F, dtype=float)
        E = np.swapaxes(F, -1, -2) @ F - np.eye(3)
        trace = np.trace(E, axis1=-2, axis2=-1)
        return 0.5 * mu * np.sum(E * E, axis=(-2, -1)) + 0.25 * lame_lambda * trace ** 2

    @staticmethod
    def svk_energy(phase: PhaseMaterial, F: np.ndarray) -> np.ndarray:
        return MaterialService.svk_density(phase.lame_mu, phase.lame_lambda, F)

    @staticmethod
    def taylor_check(phase: PhaseMaterial, G: np.ndarray, t_values: Iterable[float]) -> list[float]:
        G = np.asarray(G, dtype=float)
        t_values = list(t_values)
        if any(t <= 0 for t in t_values) or any(a <= b for a, b in zip(t_values, t_values[1:])):
            raise bad_config("t_values must be positive and strictly decreasing")

        norm = float(np.sum(G * G))
        if norm == 0.0:
            return [0.0 for _ in t_values]

        residuals = []
        for t in t_values:
            W = MaterialService.svk_energy(phase, np.eye(3) + t * G)
            Q = MaterialService.q0_apply(phase.q0, t * G)
            residuals.append(float(abs(W - Q) / (t * t * norm)))
        return residuals

    @staticmethod
    def coercivity_constants(q: QuadraticFormQ0) -> tuple[float, float]:
        if np.max(np.abs(q.voigt - q.voigt.T)) > SYMMETRY_TOLERANCE * max(1.0, np.max(np.abs(q.voigt))):
            raise invalid_material("quadratic form is not symmetric")

        eigenvalues = np.linalg.eigvalsh(q.voigt)
        c1, c2 = float(eigenvalues[0]), float(eigenvalues[-1])
        if c1 <= 0:
            raise invalid_material(f"quadratic form is not coercive on symmetric matrices (c1={c1:.3e})")
        return c1, c2

    @staticmethod
    def growth_ratio(phase: PhaseMaterial, F: np.ndarray) -> np.ndarray:
        """W(F) / dist^2(F, SO(3)); the lower growth bound asks this to stay above c1 near SO(3)."""
        distance = dist_to_so3(F)
        return MaterialService.svk_energy(phase, F) / np.maximum(distance ** 2, np.finfo(float).tiny)

    @staticmethod
    def phase_material(entry: PhaseMaterialEntry) -> PhaseMaterial:
        return PhaseMaterial(phase_id=entry.phase_id, lame_mu=entry.mu, lame_lambda=entry.lame_lambda,
                             q0=MaterialService.isotropic_form(entry.mu, entry.lame_lambda))

    @staticmethod
    def material_table(entries: Iterable[PhaseMaterialEntry]) -> MaterialTable:
        return MaterialTable([MaterialService.phase_material(entry) for entry in entries])

    @staticmethod
    def material_table_from_json(document: list[dict[str, Any]]) -> MaterialTable:
        entries = [PhaseMaterialEntry.model_validate(row) for row in document]
        if len({entry.phase_id for entry in entries}) != len(entries):
            raise bad_config("material table lists a phase twice")
        return MaterialService.material_table(entries)

    @staticmethod
    def coercivity_bounds(materials: MaterialTable) -> tuple[float, float]:
        """(min c1, max c2) over all phases of the table."""
        constants = [MaterialService.coercivity_constants(phase.q0) for phase in materials]
        return min(c[0] for c in constants), max(c[1] for c in constants)
