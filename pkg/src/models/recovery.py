from dataclasses import dataclass, field
from typing import Any
import numpy as np

from src.schemas.recovery import IsometryKind
from src.utils.fem import periodic_trilinear

# II_ab = d_a y . d_b n
II_SIGN_CONVENTION: str = "II_ab = d_a y . d_b n"

def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b, axis=-1)

@dataclass(frozen=True)
class IsometrySpec:
    kind: IsometryKind
    domain: tuple[float, float, float, float]
    radius: float = float("inf")

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @property
    def curvature(self) -> float:
        return 0.0 if self.kind is IsometryKind.FLAT else 1.0 / self.radius

    def y(self, x: np.ndarray) -> np.ndarray:
        x1, x2 = x[..., 0], x[..., 1]
        if self.kind is IsometryKind.FLAT:
            return np.stack([x1, x2, np.zeros_like(x1)], axis=-1)
        r = self.radius
        return np.stack([r * np.sin(x1 / r), x2, r * np.cos(x1 / r)], axis=-1)

    def tangents(self, x: np.ndarray) -> np.ndarray:
        """(..., 3, 2) columns d_1 y, d_2 y."""
        x1 = x[..., 0]
        zeros, ones = np.zeros_like(x1), np.ones_like(x1)
        if self.kind is IsometryKind.FLAT:
            d1 = np.stack([ones, zeros, zeros], axis=-1)
        else:
            d1 = np.stack([np.cos(x1 / self.radius), zeros, -np.sin(x1 / self.radius)], axis=-1)
        d2 = np.stack([zeros, ones, zeros], axis=-1)
        return np.stack([d1, d2], axis=-1)

    def normal(self, x: np.ndarray) -> np.ndarray:
        t = self.tangents(x)
        return cross(t[..., 0], t[..., 1])

    def second_fundamental(self, x: np.ndarray) -> np.ndarray:
        II = np.zeros(x.shape[:-1] + (2, 2))
        II[..., 0, 0] = self.curvature
        return II

    def frame(self, x: np.ndarray) -> np.ndarray:
        """R = (d_1 y | d_2 y | n)."""
        return np.concatenate([self.tangents(x), self.normal(x)[..., None]], axis=-1)

    def frame_derivatives(self, x: np.ndarray) -> np.ndarray:
        """(..., 2, 3, 3): d_a R, using d_ab y = -II_ab n and d_a n = II_ag d_g y."""
        t, n, II = self.tangents(x), self.normal(x), self.second_fundamental(x)
        dR = np.empty(x.shape[:-1] + (2, 3, 3))
        for a in range(2):
            for b in range(2):
                dR[..., a, :, b] = -II[..., a, b, None] * n
            dR[..., a, :, 2] = np.einsum("...g,...ig->...i", II[..., a, :], t)
        return dR

    def json(self) -> dict[str, Any]:
        return {"kind": str(self.kind), "radius": self.radius if np.isfinite(self.radius) else None,
                "domain": list(self.domain), "ii_convention": II_SIGN_CONVENTION}

@dataclass(frozen=True, eq=False)
class LinearDisplacement:
    """V(x') = offset + A x' with A (3, 2)."""
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 2)))

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.offset + x @ np.asarray(self.A).T

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.A, dtype=float), x.shape[:-1] + (3, 2))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.A) and not np.any(self.offset)

@dataclass(frozen=True, eq=False)
class Patch:
    index: int
    bounds: tuple[float, float, float, float]
    load: np.ndarray
    corrector: np.ndarray | None = field(default=None, repr=False)

    def contains(self, x: np.ndarray) -> np.ndarray:
        a1, a2, b1, b2 = self.bounds
        return (x[..., 0] >= a1) & (x[..., 0] <= b1) & (x[..., 1] >= a2) & (x[..., 1] <= b2)

def smoothstep(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t)

def cutoff(x: np.ndarray, patch: Patch, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """C^1 tent chi of the patch, zero within delta of its boundary, and grad chi (..., 2)."""
    a1, a2, b1, b2 = patch.bounds
    values, slopes = [], []
    for k, (lo, hi) in enumerate(((a1, b1), (a2, b2))):
        t = x[..., k]
        near_low = (t - lo) <= (hi - t)
        distance = np.where(near_low, t - lo, hi - t)
        s, ds = smoothstep((distance - delta) / delta)
        values.append(s)
        slopes.append(np.where(near_low, 1.0, -1.0) * ds / delta)

    inside = patch.contains(x)
    chi = np.where(inside, values[0] * values[1], 0.0)
    grad = np.stack([slopes[0] * values[1], values[0] * slopes[1]], axis=-1) * inside[..., None]
    return chi, grad

@dataclass(frozen=True, eq=False)
class DeformationSampler:
    """u^h = y + h x3 n + h (V + h x3 mu) + h eps sum_i chi_i R g_i(x' / eps, x3)."""
    iso: IsometrySpec
    h: float
    epsilon: float
    delta: float
    patches: tuple[Patch, ...]
    box_side: float
    displacement: LinearDisplacement = field(default_factory=LinearDisplacement)

    @property
    def layers(self) -> int:
        """Thickness layers of the corrector mesh; the integrand is smooth inside each."""
        for patch in self.patches:
            if patch.corrector is not None:
                return patch.corrector.shape[2] - 1
        return 1

    def mu(self, x: np.ndarray) -> np.ndarray:
        t, n = self.iso.tangents(x), self.iso.normal(x)
        dV = self.displacement.gradient(x)
        w = cross(dV[..., 0], t[..., 1]) + cross(t[..., 0], dV[..., 1])
        return w - np.sum(w * n, axis=-1, keepdims=True) * n

    def mu_gradient(self, x: np.ndarray) -> np.ndarray:
        """(..., 3, 2) in-plane derivatives of mu."""
        if self.displacement.is_zero:
            return np.zeros(x.shape[:-1] + (3, 2))

        t, n = self.iso.tangents(x), self.iso.normal(x)
        dR = self.iso.frame_derivatives(x)
        dV = self.displacement.gradient(x)
        w = cross(dV[..., 0], t[..., 1]) + cross(t[..., 0], dV[..., 1])
        columns = []
        for a in range(2):
            dn = dR[..., a, :, 2]
            dw = cross(dV[..., 0], dR[..., a, :, 1]) + cross(dR[..., a, :, 0], dV[..., 1])
            wn = np.sum(w * n, axis=-1, keepdims=True)
            dwn = np.sum(dw * n, axis=-1, keepdims=True) + np.sum(w * dn, axis=-1, keepdims=True)
            columns.append(dw - dwn * n - wn * dn)
        return np.stack(columns, axis=-1)

    def corrector_terms(self, x: np.ndarray, x3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """sum_i chi_i g_i (..., 3) and its derivatives (eps d_1, eps d_2, d_3) as columns (..., 3, 3)."""
        value = np.zeros(x.shape[:-1] + (3,))
        gradient = np.zeros(x.shape[:-1] + (3, 3))
        for patch in self.patches:
            if patch.corrector is None:
                continue
            chi, dchi = cutoff(x, patch, self.delta)
            active = chi > 0.0
            if not np.any(active) and not np.any(dchi):
                continue
            g, dg = periodic_trilinear(patch.corrector, self.box_side, x[..., 0] / self.epsilon,
                                       x[..., 1] / self.epsilon, x3)
            value += chi[..., None] * g
            gradient[..., :2] += dchi[..., None, :] * g[..., None] * self.epsilon + chi[..., None, None] * dg[..., :2]
            gradient[..., 2] += chi[..., None] * dg[..., 2]
        return value, gradient

    def deformation(self, x: np.ndarray, x3: np.ndarray) -> np.ndarray:
        h, eps = self.h, self.epsilon
        R = self.iso.frame(x)
        g, _ = self.corrector_terms(x, x3)
        return (self.iso.y(x) + h * x3[..., None] * self.iso.normal(x)
                + h * (self.displacement.value(x) + h * x3[..., None] * self.mu(x))
                + h * eps * np.einsum("...ij,...j->...i", R, g))

    def gradient(self, x: np.ndarray, x3: np.ndarray) -> np.ndarray:
        """Scaled gradient (d_1 u, d_2 u, d_3 u / h), (..., 3, 3)."""
        h, eps = self.h, self.epsilon
        R, dR = self.iso.frame(x), self.iso.frame_derivatives(x)
        t, n = R[..., :2], R[..., 2]
        g, dg = self.corrector_terms(x, x3)

        F = np.empty(x.shape[:-1] + (3, 3))
        F[..., :2] = t + h * x3[..., None, None] * dR[..., :, :, 2].swapaxes(-1, -2)
        F[..., :2] += h * self.displacement.gradient(x) + h * h * x3[..., None, None] * self.mu_gradient(x)
        F[..., 2] = n + h * self.mu(x)

        # h eps d_a (R g) = h R (dg_a) + h eps (d_a R) g, with dg_a carrying 1/eps from x'/eps
        F[..., :2] += h * np.einsum("...ij,...ja->...ia", R, dg[..., :2])
        F[..., :2] += h * eps * np.einsum("...aij,...j->...ia", dR, g)
        F[..., 2] += eps * np.einsum("...ij,...j->...i", R, dg[..., 2])
        return F

    def rotated(self, Q: np.ndarray) -> "RotatedSampler":
        return RotatedSampler(base=self, Q=np.asarray(Q, dtype=float))

@dataclass(frozen=True, eq=False)
class RotatedSampler:
    base: DeformationSampler
    Q: np.ndarray

    @property
    def h(self) -> float:
        return self.base.h

    @property
    def epsilon(self) -> float:
        return self.base.epsilon

    @property
    def iso(self) -> IsometrySpec:
        return self.base.iso

    @property
    def delta(self) -> float:
        return self.base.delta

    @property
    def layers(self) -> int:
        return self.base.layers

    def deformation(self, x: np.ndarray, x3: np.ndarray) -> np.ndarray:
        return self.base.deformation(x, x3) @ self.Q.T

    def gradient(self, x: np.ndarray, x3: np.ndarray) -> np.ndarray:
        return self.Q @ self.base.gradient(x, x3)

@dataclass(frozen=True)
class RecoveryReport:
    h: float
    epsilon: float
    eta: float
    delta: float
    Ih: float
    I0: float
    relative_gap: float
    quadrature: dict[str, Any]
    seed: int | None = None

    def json(self) -> dict[str, Any]:
        return {
            "h": self.h, "epsilon": self.epsilon, "eta": self.eta, "delta": self.delta,
            "Ih": self.Ih, "I0": self.I0, "relative_gap": self.relative_gap,
            "quadrature": self.quadrature, "seed": self.seed,
            "acceptance": "engineering tolerance: gap at the finest h within 15%, decreasing over the schedule",
        }

@dataclass(frozen=True)
class Quadrature:
    in_plane_gauss: int = 2
    thickness_gauss: int = 3
    cells_per_epsilon: int = 4
    cell: float | None = None

    def json(self) -> dict[str, Any]:
        return {"in_plane_gauss": self.in_plane_gauss, "thickness_gauss": self.thickness_gauss,
                "cells_per_epsilon": self.cells_per_epsilon, "cell": self.cell}
