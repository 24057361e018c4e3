"""Maurer-Cartan structures and solvable Lie-algebra homomorphisms.

A homomorphism between solvable groups is encoded by a rectangular matrix W
relating the left-invariant coframes, E^i = W^i_a e^a.  Requiring that the
pulled-back Maurer-Cartan equations close yields a quadratic constraint
system in the entries of W; solutions induce (generally nonlinear)
coordinate maps obtained by integrating the coframe relation along paths.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from . import spaces
from .spaces import SolvCoords, SpaceId

__all__ = [
    "RootLabel",
    "MCStructure",
    "HomoMatrix",
    "ConstraintSystem",
    "aN_root_system",
    "borel_mc",
    "r1_mc",
    "mc_structure",
    "build_constraints",
    "residual",
    "solve_numeric",
    "r1_homomorphism",
    "coframe",
    "integrate_coordinate_map",
    "integrate_along_path",
    "mc_for_name",
    "space_for_name",
]


@dataclasses.dataclass(frozen=True)
class RootLabel:
    """Positive-root label [h, k]: the root alpha_k + ... + alpha_{k+h-1}
    of height h; h = 0 labels the k-th Cartan generator."""

    h: int
    k: int

    def __post_init__(self):
        if self.h < 0 or self.k < 1:
            raise ValueError("invalid root label")


@dataclasses.dataclass(frozen=True)
class MCStructure:
    """Structure constants in canonical Maurer-Cartan form
    dE^i + (1/2) f^i_jk E^j ^ E^k = 0."""

    d: int
    f: np.ndarray
    labels: tuple
    name: str = ""


@dataclasses.dataclass(frozen=True)
class HomoMatrix:
    """Linear homomorphism data: E^i_target = W^i_a e^a_source, plus the
    optional closed-form translation vector b for r=1 targets."""

    W: np.ndarray
    source: SpaceId | None = None
    target: SpaceId | None = None
    b: np.ndarray | None = None
    residual: float | None = None
    branch_tag: str | None = None
    seed: int | None = None


# ---------------------------------------------------------------------------
# Root systems and Maurer-Cartan structures
# ---------------------------------------------------------------------------


def aN_root_system(ell: int):
    """Root system of sl(ell+1): returns (all_roots, positive_labels) where
    roots are eps-basis integer vectors and every positive root
    eps_i - eps_j (i < j) carries the unique label [h=j-i, k=i]."""
    if ell < 1:
        raise ValueError("rank must be >= 1")
    positives = []
    for h in range(1, ell + 1):
        for k in range(1, ell - h + 2):
            vec = np.zeros(ell + 1, dtype=int)
            vec[k - 1] = 1
            vec[k - 1 + h] = -1
            positives.append((RootLabel(h, k), vec))
    roots = [v for _, v in positives] + [-v for _, v in positives]
    return roots, positives


def _borel_labels(n: int):
    ell = n - 1
    labels = [RootLabel(0, k) for k in range(1, ell + 1)]
    labels += [
        RootLabel(h, k)
        for h in range(1, ell + 1)
        for k in range(1, ell - h + 2)
    ]
    return labels


def _borel_combinatorial(n: int) -> np.ndarray:
    """Structure constants of the Borel algebra of sl(n) from the root
    combinatorics alone: Cartan pairings via the eps-coordinates of the
    Cartan basis (H_j ~ e_{j+1} - e_1), and the splitting rule
    [h1,k1] = [h2,k1] + [h3,k1+h2]."""
    labels = _borel_labels(n)
    ell = n - 1
    d = len(labels)
    index = {(lab.h, lab.k): i for i, lab in enumerate(labels)}
    f = np.zeros((d, d, d))
    for lab in labels:
        if lab.h == 0:
            continue
        i = index[(lab.h, lab.k)]
        # Cartan-root pairing: root eps_k - eps_{k+h} against H_j
        for j in range(1, ell + 1):
            val = 0.0
            if j + 1 == lab.k:
                val += 1.0
            if lab.k == 1:
                val -= 1.0
            if j + 1 == lab.k + lab.h:
                val -= 1.0
            jj = index[(0, j)]
            f[i, jj, i] += val
            f[i, i, jj] -= val
        # root-root splittings of fixed total height
        for h2 in range(1, lab.h):
            h3 = lab.h - h2
            j1 = index[(h2, lab.k)]
            j2 = index[(h3, lab.k + h2)]
            f[i, j1, j2] += 1.0
            f[i, j2, j1] -= 1.0
    return f


def borel_mc(n: int) -> MCStructure:
    """Maurer-Cartan structure of the Borel subalgebra of sl(n).

    Computed two independent ways — combinatorially from the root system
    and numerically from matrix commutators of the triangular basis — and
    asserted to agree exactly."""
    if n < 2:
        raise ValueError("n must be >= 2")
    f_comb = _borel_combinatorial(n)
    spec = spaces.solvable_generators(SpaceId.sl(n))
    f_comm = spec.structure_constants
    if not np.array_equal(np.round(f_comm, 9), np.round(f_comb, 9)):
        raise AssertionError(
            "combinatorial and commutator structure constants disagree"
        )
    return MCStructure(
        d=spec.d, f=f_comb, labels=tuple(_borel_labels(n)), name=f"borel_sl({n})"
    )


def r1_mc(q: int) -> MCStructure:
    """Maurer-Cartan structure of an r=1 solvable algebra with q+1
    nilpotent forms: dE^1 = 0, dE^{1+i} + E^1 ^ E^{1+i} = 0."""
    if q < 0:
        raise ValueError("q must be >= 0")
    d = q + 2
    f = np.zeros((d, d, d))
    for i in range(1, d):
        f[i, 0, i] = 1.0
        f[i, i, 0] = -1.0
    labels = tuple(
        [RootLabel(0, 1)] + [RootLabel(1, k) for k in range(1, d)]
    )
    return MCStructure(d=d, f=f, labels=labels, name=f"r1({q})")


def mc_structure(space: SpaceId) -> MCStructure:
    """Canonical MC structure of a space's solvable algebra."""
    if space.is_r1:
        return r1_mc(space.subpaint_dim - 1)
    if space.family == "sl":
        return borel_mc(space.N)
    spec = spaces.solvable_generators(space)
    return MCStructure(
        d=spec.d,
        f=spec.structure_constants,
        labels=tuple(spec.ordering),
        name=str(space),
    )


# ---------------------------------------------------------------------------
# Constraint systems
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ConstraintSystem:
    """Quadratic residuals R^i_{bc}(W) = W^i_a g^a_bc - f^i_jk W^j_b W^k_c
    for b < c, with g the source and f the target structure constants."""

    source: MCStructure
    target: MCStructure

    @property
    def shape(self):
        return (self.target.d, self.source.d)

    def residual_tensor(self, W: np.ndarray) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        if W.shape != self.shape:
            raise ValueError(f"expected W of shape {self.shape}")
        lin = np.einsum("ia,abc->ibc", W, self.source.f)
        quad = np.einsum("ijk,jb,kc->ibc", self.target.f, W, W)
        return lin - quad

    def residual_vector(self, W: np.ndarray) -> np.ndarray:
        R = self.residual_tensor(W)
        iu = np.triu_indices(self.source.d, k=1)
        return R[:, iu[0], iu[1]].reshape(-1)


def build_constraints(source: MCStructure, target: MCStructure) -> ConstraintSystem:
    """Constraint system for homomorphisms E^i_target = W^i_a e^a_source."""
    return ConstraintSystem(source=source, target=target)


def residual(W, system: ConstraintSystem) -> float:
    """Root-sum-square of all constraint values; 0 iff W is exact."""
    W = W.W if isinstance(W, HomoMatrix) else np.asarray(W, dtype=float)
    return float(np.linalg.norm(system.residual_vector(W)))


# ---------------------------------------------------------------------------
# Numeric solving
# ---------------------------------------------------------------------------

_INJ_SHAPE = (9, 3)
_REST_SHAPE = (3, 9)


def tag_branch(W: np.ndarray, tol: float = 1e-6) -> str:
    """Zero-pattern classification of a solution against the known
    principal branches of the 9x3 injection / 3x9 restriction systems."""
    W = np.asarray(W)
    if W.shape == _INJ_SHAPE:
        a, b, g = W[0, 0], W[1, 0], W[2, 0]
        if (
            np.max(np.abs(W[3:6, 1:])) <= tol
            and abs(a + b) <= tol
            and abs(g - a + 1.0) <= tol
        ):
            return "branch-11"
        if (
            abs(a) <= tol
            and abs(b) <= tol
            and abs(g + 1.0) <= tol
            and np.max(np.abs(W[4])) <= tol
        ):
            return "branch-12"
        return "untagged"
    if W.shape == _REST_SHAPE:
        mask = np.ones(9, dtype=bool)
        mask[2] = False
        if np.max(np.abs(W[:, mask])) <= tol and np.max(np.abs(W[:, 2])) > tol:
            return "cartan-column-3"
        return "untagged"
    return "untagged"


def _pattern_starts(system: ConstraintSystem, rng):
    """Structured initial guesses restricted to known branch shapes:
    returns (x0, fixed_mask, fixed_values) triples on the flat W vector."""
    d2, d1 = system.shape
    n = d2 * d1
    out = []
    if (d2, d1) == _INJ_SHAPE:
        # branch with three active Cartan rows (delta, -delta, delta-1)
        W0 = rng.uniform(-1.0, 1.0, size=_INJ_SHAPE)
        delta = rng.uniform(-1.0, 1.0)
        W0[0] = (delta, 0, 0)
        W0[1] = (-delta, 0, 0)
        W0[2] = (delta - 1.0, 0, 0)
        W0[3:6, 1:] = 0.0
        fixed = np.zeros(_INJ_SHAPE, dtype=bool)
        fixed[:3, :] = True
        fixed[3:6, 1:] = True
        out.append((W0.reshape(-1), fixed.reshape(-1), W0.reshape(-1).copy()))
        # branch with a single active Cartan row (0, 0, -1)
        W1 = rng.uniform(-1.0, 1.0, size=_INJ_SHAPE)
        W1[0] = (0, 0, 0)
        W1[1] = (0, 0, 0)
        W1[2] = (-1.0, 0, 0)
        W1[4] = 0.0
        fixed = np.zeros(_INJ_SHAPE, dtype=bool)
        fixed[:3, :] = True
        fixed[4, :] = True
        out.append((W1.reshape(-1), fixed.reshape(-1), W1.reshape(-1).copy()))
    if (d2, d1) == _REST_SHAPE:
        W0 = np.zeros(_REST_SHAPE)
        W0[:, 2] = rng.uniform(-1.0, 1.0, size=3)
        fixed = np.zeros(_REST_SHAPE, dtype=bool)
        fixed[:, [0, 1, 3, 4, 5, 6, 7, 8]] = True
        out.append((W0.reshape(-1), fixed.reshape(-1), W0.reshape(-1).copy()))
    # identity-shaped start helps source == target systems
    if d1 == d2:
        out.append((np.eye(d1).reshape(-1), np.zeros(n, dtype=bool), None))
    return out


def _constraint_jacobian(system: ConstraintSystem, W: np.ndarray) -> np.ndarray:
    """Exact Jacobian of residual_vector with respect to W.reshape(-1)."""
    g, f = system.source.f, system.target.f
    d2, d1 = system.shape
    J = np.einsum("im,dbc->ibcmd", np.eye(d2), g)
    J -= np.einsum("imk,kc,db->ibcmd", f, W, np.eye(d1))
    J -= np.einsum("ijm,jb,dc->ibcmd", f, W, np.eye(d1))
    iu = np.triu_indices(d1, k=1)
    return J[:, iu[0], iu[1], :, :].reshape(-1, d2 * d1)


_QUANTUM = 1e-9


def _quantize(x: np.ndarray, quantum: float) -> np.ndarray:
    return np.round(x / quantum) * quantum


def _gauss_newton(system: ConstraintSystem, x0: np.ndarray,
                  free: np.ndarray) -> np.ndarray | None:
    """Damped Gauss-Newton on the flat W vector, updating only the free
    entries.  Iterates are quantized while far from the solution so the
    trajectory is reproducible bit-for-bit across runs; the final Newton
    polish and output rounding keep the converged point both exact
    (residual well below 1e-10) and byte-stable."""
    d2, d1 = system.shape
    x = _quantize(x0.copy(), _QUANTUM)

    def res(x):
        return system.residual_vector(x.reshape(d2, d1))

    r = res(x)
    for _ in range(200):
        nr = np.linalg.norm(r)
        if nr <= 1e-7:
            break
        J = _constraint_jacobian(system, x.reshape(d2, d1))[:, free]
        dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        alpha = 1.0
        while alpha > 1e-6:
            xn = x.copy()
            xn[free] = _quantize(x[free] + alpha * dx, _QUANTUM)
            rn = res(xn)
            if np.linalg.norm(rn) < nr:
                x, r = xn, rn
                break
            alpha *= 0.5
        else:
            return None
    else:
        return None
    # full-precision polish (quadratic convergence from a quantized point)
    for _ in range(4):
        J = _constraint_jacobian(system, x.reshape(d2, d1))[:, free]
        dx, *_ = np.linalg.lstsq(J, -res(x), rcond=None)
        x[free] = x[free] + dx
    x = _quantize(x, 1e-12)
    return x if np.linalg.norm(res(x)) <= 1e-10 else None


def solve_numeric(system: ConstraintSystem, seeds: int, seed: int = 0):
    """Damped Gauss-Newton solves of the quadratic system from random and
    pattern-restricted starts; returns deduplicated exact solutions
    (residual <= 1e-10) ordered deterministically."""
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    rng = np.random.default_rng(seed)
    d2, d1 = system.shape
    n = d1 * d2

    starts = []
    for _ in range(seeds):
        starts.append((rng.uniform(-1.0, 1.0, size=n), None, None))
        for trip in _pattern_starts(system, rng):
            starts.append(trip)
    found = []
    for x0, fixed, fixed_vals in starts:
        if fixed is not None:
            free = ~fixed
            start = fixed_vals.copy()
            start[free] = x0[free]
        else:
            free = np.ones(n, dtype=bool)
            start = x0
        x = _gauss_newton(system, start, free)
        if x is not None:
            found.append(x.reshape(d2, d1))
    # deduplicate by pairwise distance, order deterministically
    uniq = []
    for W in sorted(found, key=lambda m: tuple(np.round(m.reshape(-1), 6))):
        if all(np.max(np.abs(W - U)) > 1e-6 for U in uniq):
            uniq.append(W)
    return [
        HomoMatrix(
            W=W,
            residual=residual(W, system),
            branch_tag=tag_branch(W),
            seed=seed,
        )
        for W in uniq
    ]


# ---------------------------------------------------------------------------
# r = 1 closed-form homomorphism
# ---------------------------------------------------------------------------


def r1_homomorphism(W: np.ndarray, b: np.ndarray, coords: SolvCoords,
                    target: SpaceId | None = None) -> SolvCoords:
    """Closed-form group homomorphism between r=1 layers:
    (Y1, Y2) -> (Y1, W Y2 + (1 - e^{-Y1}) b)."""
    coords.space._require_r1()
    W = np.asarray(W)
    s1 = coords.space.subpaint_dim
    if W.shape[1] != s1:
        raise ValueError(f"W must have {s1} columns for source {coords.space}")
    s2 = W.shape[0]
    b = np.zeros(s2) if b is None else np.asarray(b)
    if b.shape != (s2,):
        raise ValueError("translation vector has wrong length")
    if target is None:
        target = SpaceId.so(1, s2)
    elif target.subpaint_dim != s2:
        raise ValueError("target space inconsistent with W")
    y1 = coords.values[0]
    sub = W @ coords.values[1:] + (1.0 - np.exp(-y1)) * b
    return SolvCoords(target, np.concatenate([[y1], sub]))


# ---------------------------------------------------------------------------
# Coframes and coordinate-map integration
# ---------------------------------------------------------------------------


def coframe(space: SpaceId, values: np.ndarray) -> np.ndarray:
    """Coframe matrix E with E^i = E[i, j] dY_j at the given coordinates.

    r=1 closed form: E^1 = dw1, E^{1+a} = w_{1+a} dw1 + dw_{1+a}.  For sl
    the left-invariant form L^{-1} dL is expanded on the triangular basis
    (derivatives taken by complex step, exact to machine precision)."""
    values = np.asarray(values, dtype=float)
    d = space.dim
    if space.is_r1:
        E = np.eye(d)
        E[1:, 0] = values[1:]
        return E
    if space.family != "sl":
        raise ValueError("coframe is implemented for r=1 and sl spaces")
    n = space.N
    ell = n - 1
    L = spaces.sl_matrix(space, values)
    h = 1e-200
    E = np.zeros((d, d))
    labels = _borel_labels(n)
    for j in range(d):
        zc = values.astype(complex)
        zc[j] += 1j * h
        dL = np.imag(spaces.sl_matrix(space, zc)) / h
        theta = np.linalg.solve(L, dL)
        for i, lab in enumerate(labels):
            if lab.h == 0:
                E[i, j] = theta[lab.k, lab.k]
            else:
                E[i, j] = theta[lab.k - 1, lab.k - 1 + lab.h]
    return E


def _integrate_segment(W: np.ndarray, src: SpaceId, tgt: SpaceId,
                       x_start: np.ndarray, x_end: np.ndarray,
                       y_start: np.ndarray, steps: int) -> np.ndarray:
    dx = x_end - x_start
    hstep = 1.0 / steps
    y = np.array(y_start, dtype=float)

    def f(t, y):
        pulled = W @ (coframe(src, x_start + t * dx) @ dx)
        return np.linalg.solve(coframe(tgt, y), pulled)

    t = 0.0
    for _ in range(steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * hstep, y + 0.5 * hstep * k1)
        k3 = f(t + 0.5 * hstep, y + 0.5 * hstep * k2)
        k4 = f(t + hstep, y + hstep * k3)
        y = y + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += hstep
    return y


def _steps_for(x_start, x_end):
    length = float(np.linalg.norm(np.asarray(x_end) - np.asarray(x_start)))
    return max(256, int(np.ceil(256 * length)))


def integrate_along_path(W: HomoMatrix, waypoints, check: bool = True) -> SolvCoords:
    """Integrate the coordinate map along a piecewise-linear path starting
    at the source origin; waypoints are coordinate vectors."""
    src, tgt = W.source, W.target
    if src is None or tgt is None:
        raise ValueError("integration requires source/target space ids")
    y = np.zeros(tgt.dim)
    x_prev = np.zeros(src.dim)
    for x_next in waypoints:
        x_next = np.asarray(x_next, dtype=float)
        steps = _steps_for(x_prev, x_next)
        y1 = _integrate_segment(W.W, src, tgt, x_prev, x_next, y, steps)
        if check:
            y2 = _integrate_segment(W.W, src, tgt, x_prev, x_next, y, 2 * steps)
            if np.max(np.abs(y1 - y2)) > 1e-7:
                warnings.warn(
                    "coordinate-map integration reduced accuracy "
                    f"({np.max(np.abs(y1 - y2)):.2e})",
                    RuntimeWarning,
                )
            y1 = y2
        y = y1
        x_prev = x_next
    return SolvCoords(tgt, y)


def integrate_coordinate_map(W: HomoMatrix, source_coords: SolvCoords) -> SolvCoords:
    """Coordinate map induced by a verified homomorphism matrix: integrate
    dY/dt = E_target(Y)^{-1} W e_source(x(t)) x'(t) along the straight path
    from the origin, with a doubled-step accuracy check."""
    if W.source is not None and source_coords.space != W.source:
        raise ValueError("source coordinates live in the wrong space")
    return integrate_along_path(W, [np.asarray(source_coords.values, dtype=float)])


# ---------------------------------------------------------------------------
# CLI algebra naming
# ---------------------------------------------------------------------------


def space_for_name(name: str) -> SpaceId:
    """Space id for an algebra name: r1(q), borel_sl(N) or solv_so(r,q)."""
    name = name.strip().lower().replace(" ", "")
    if name.startswith("r1(") and name.endswith(")"):
        q = int(name[3:-1])
        return SpaceId.so(1, q + 1)
    if name.startswith("borel_sl(") and name.endswith(")"):
        return SpaceId.sl(int(name[9:-1]))
    if name.startswith("solv_so(") and name.endswith(")"):
        parts = name[8:-1].split(",")
        r, total = int(parts[0]), int(parts[1])
        return SpaceId.so(r, total - r)
    raise ValueError(f"unsupported algebra name: {name!r}")


def mc_for_name(name: str) -> MCStructure:
    """MC structure for a CLI algebra name."""
    return mc_structure(space_for_name(name))
