"""Isometry-group actions on the solvable coordinate patch.

Every action routes through the compensator-free pipeline: coordinates are
exponentiated to a triangular element, pushed to the symmetric coset matrix
M, acted on as M -> g M g^T, refactored by the triangular Cholesky-Crout
algorithm, and read back as coordinates.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from . import spaces
from .spaces import (
    CosetPoint,
    SolvCoords,
    SpaceId,
    TriangularElement,
)

__all__ = [
    "GroupElement",
    "PaintRotation",
    "FiberGenerator",
    "adjoint_on_coset",
    "isometry_action",
    "paint_rotate",
    "embedded_paint",
    "bias_translate",
    "build_fiber_generators",
    "fiber_rotation",
    "classify_element",
]


@dataclasses.dataclass(frozen=True)
class GroupElement:
    """Isometry-group element with its classification tag.

    ``kind`` is one of ``solvable`` (triangular, positive diagonal),
    ``paint`` (eta-orthogonal and stabilizing the solvable algebra),
    ``grassmannian`` (eta-orthogonal, not paint) or ``external``.
    """

    space: SpaceId
    matrix: np.ndarray
    kind: str


@dataclasses.dataclass(frozen=True)
class PaintRotation:
    """Orthogonal rotation O of the subPaint vector (r=1 family)."""

    space: SpaceId
    orthogonal: np.ndarray

    def __post_init__(self):
        s = self.space.subpaint_dim
        O = np.asarray(self.orthogonal, dtype=float)
        if O.shape != (s, s):
            raise ValueError(f"expected a {s}x{s} rotation for {self.space}")
        if not np.allclose(O.T @ O, np.eye(s), atol=1e-12):
            raise ValueError("paint rotation must be orthogonal")
        object.__setattr__(self, "orthogonal", O)


@dataclasses.dataclass(frozen=True)
class FiberGenerator:
    """Compact generator mixing the Cartan coordinate with one fiber
    component of the subPaint vector."""

    space: SpaceId
    index: int
    matrix: np.ndarray


def adjoint_on_coset(g: GroupElement, M: CosetPoint) -> CosetPoint:
    """Adjoint action M -> g M g^T on the symmetric representation."""
    m = g.matrix @ M.matrix @ np.swapaxes(g.matrix, -1, -2)
    return CosetPoint(M.space, m)


def isometry_action(g: GroupElement, coords: SolvCoords) -> SolvCoords:
    """Coordinate form of the adjoint action, via the pipeline
    Sigma -> M -> g M g^T -> Crout -> Sigma^{-1}."""
    if g.kind == "external":
        raise ValueError("external elements do not act isometrically")
    L = spaces.sigma(coords)
    M = spaces.to_coset(L)
    M2 = adjoint_on_coset(g, M)
    return spaces.sigma_inv(spaces.cholesky_crout(M2))


def _action_matrix_batch(g_matrix: np.ndarray, space: SpaceId,
                         values: np.ndarray) -> np.ndarray:
    """Batched pipeline on raw coordinate arrays (dtype preserved)."""
    L = (
        spaces.r1_matrix(space, values)
        if space.is_r1
        else spaces.sl_matrix(space, values)
    )
    M = L @ np.swapaxes(L, -1, -2)
    M2 = g_matrix @ M @ np.swapaxes(g_matrix, -1, -2)
    L2 = spaces.cholesky_crout_matrix(M2)
    if space.is_r1:
        return spaces.r1_coords_from_matrix(space, L2)
    return spaces.sl_coords_from_matrix(space, L2)


def embedded_paint(rot: PaintRotation) -> GroupElement:
    """Embed O into the isometry group as blockdiag(1, O, 1)."""
    n = rot.space.N
    g = np.eye(n)
    g[1 : n - 1, 1 : n - 1] = rot.orthogonal
    return GroupElement(rot.space, g, "paint")


def paint_rotate(rot: PaintRotation, coords: SolvCoords) -> SolvCoords:
    """Rotate the subPaint vector: (w1, wsub) -> (w1, O wsub)."""
    if coords.space != rot.space:
        raise ValueError("paint_rotate requires matching spaces")
    v = np.array(coords.values, copy=True)
    v[1:] = rot.orthogonal @ v[1:]
    return SolvCoords(coords.space, v)


def bias_translate(u: SolvCoords, coords: SolvCoords) -> SolvCoords:
    """Left translation by u — the geometric analogue of a bias term."""
    return spaces.group_product(u, coords)


def build_fiber_generators(space: SpaceId):
    """Generators of the fiber rotations for an r=1 space.

    In the diagonal eta basis the compact subalgebra consists of rotations
    among the positive-signature directions; the returned generators rotate
    the lightcone-pair direction into the fiber directions of the middle
    block (components 2..s of the subPaint vector), which is exactly the
    mixing of the Cartan coordinate with one fiber coordinate."""
    space._require_r1()
    eta = spaces.build_eta(space)
    omega = eta.omega
    n = space.N
    gens = []
    for j in range(1, space.subpaint_dim):
        jb = np.zeros((n, n))
        jb[0, 1 + j] = 1.0
        jb[1 + j, 0] = -1.0
        gens.append(FiberGenerator(space, j, omega.T @ jb @ omega))
    return gens


def fiber_rotation(gen: FiberGenerator, angle: float) -> GroupElement:
    """One-parameter compact subgroup element exp(angle * F)."""
    g = scipy.linalg.expm(angle * gen.matrix)
    return GroupElement(gen.space, g, "grassmannian")


def _is_eta_orthogonal(g: np.ndarray, eta: np.ndarray, tol=1e-10) -> bool:
    return bool(np.max(np.abs(g.T @ eta @ g - eta)) <= tol)


def _stabilizes_solvable(g: np.ndarray, space: SpaceId, tol=1e-10) -> bool:
    spec = spaces.solvable_generators(space)
    basis = np.stack([T.reshape(-1) for T in spec.generators], axis=1)
    ginv = np.linalg.inv(g)
    for T in spec.generators:
        ad = (g @ T @ ginv).reshape(-1)
        coef, *_ = np.linalg.lstsq(basis, ad, rcond=None)
        if np.max(np.abs(basis @ coef - ad)) > tol:
            return False
    return True


def classify_element(g: np.ndarray, space: SpaceId) -> GroupElement:
    """Tag a matrix as solvable / paint / grassmannian / external."""
    g = np.asarray(g, dtype=float)
    det = np.linalg.det(g)
    if abs(det) < 1e-300:
        raise ValueError("matrix must be invertible")
    if space.family == "so":
        eta = spaces.build_eta(space).entries
        if _is_eta_orthogonal(g, eta):
            upper = np.allclose(g, np.triu(g), atol=1e-12)
            if upper and np.all(np.diag(g) > 0):
                return GroupElement(space, g, "solvable")
            if _stabilizes_solvable(g, space):
                return GroupElement(space, g, "paint")
            return GroupElement(space, g, "grassmannian")
        gn = g / np.sign(det) / abs(det) ** (1.0 / space.N)
        return GroupElement(space, gn, "external")
    # sl family: the isometric elements are the orthogonal ones
    if np.allclose(g.T @ g, np.eye(space.N), atol=1e-10):
        if _stabilizes_solvable(g, space):
            return GroupElement(space, g, "paint")
        return GroupElement(space, g, "grassmannian")
    upper = np.allclose(g, np.triu(g), atol=1e-12)
    if upper and np.all(np.diag(g) > 0) and abs(det - 1.0) < 1e-10:
        return GroupElement(space, g, "solvable")
    gn = g / np.sign(det) / abs(det) ** (1.0 / space.N)
    return GroupElement(space, gn, "external")
