"""Activation-free Cartan networks on r=1 solvable layers.

A network is a chain of hyperbolic layers: a linear injection of the input
features into the solvable coordinates of the first layer, followed per
transition by the closed-form group homomorphism (matrix W and translation
b) and a product of compact fiber rotations.  There is no pointwise
activation; all nonlinearity comes from the group structure.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import scipy.linalg

from . import homo, isometry, spaces
from .spaces import CartanBoundError, SolvCoords, SpaceId

__all__ = [
    "LayerSpec",
    "NetworkConfig",
    "ParamSet",
    "FlatParams",
    "layout_for",
    "init_params",
    "flatten",
    "unflatten",
    "inject",
    "layer_forward",
    "forward",
    "forward_batch",
    "save_model",
    "load_model",
]

FORMAT_VERSION = "v1"


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    """One hidden layer: an r=1 symmetric space."""

    space: SpaceId

    def __post_init__(self):
        self.space._require_r1()


@dataclasses.dataclass(frozen=True)
class NetworkConfig:
    """Architecture: input width, ordered layers, and task head."""

    input_dim: int
    layers: tuple
    task: str = "binary"
    K: int | None = None

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if len(self.layers) < 1:
            raise ValueError("need at least one layer")
        layers = tuple(
            l if isinstance(l, LayerSpec) else LayerSpec(l) for l in self.layers
        )
        object.__setattr__(self, "layers", layers)
        if self.task not in ("binary", "multiclass", "regression"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "multiclass" and (self.K is None or self.K < 2):
            raise ValueError("multiclass requires K >= 2")

    @property
    def last_space(self) -> SpaceId:
        return self.layers[-1].space

    @property
    def n_separators(self) -> int:
        if self.task == "binary":
            return 1
        if self.task == "multiclass":
            return self.K
        return 0


@dataclasses.dataclass
class ParamSet:
    """All trainable parameters.

    ``Q`` injects features into layer-1 coordinates, ``lam`` holds the
    injection fiber angles, and per transition i the triple
    (``Ws[i]``, ``bs[i]``, ``psis[i]``) parameterizes the homomorphism and
    the post-homomorphism fiber rotations.  ``head`` holds the classifier
    parameters: arrays ``alpha``/``beta`` (length K) and ``w`` (K x s) for
    separator heads, or ``v``/``c`` for the linear regression read-out."""

    Q: np.ndarray
    lam: np.ndarray
    Ws: list
    bs: list
    psis: list
    head: dict


@dataclasses.dataclass(frozen=True)
class FlatParams:
    """Contiguous parameter vector plus the (name, shape) layout."""

    vector: np.ndarray
    layout: tuple

    @property
    def offsets(self) -> dict:
        out, pos = {}, 0
        for name, shape in self.layout:
            size = int(np.prod(shape, dtype=int))
            out[name] = (pos, shape)
            pos += size
        return out


def layout_for(config: NetworkConfig) -> tuple:
    """Stable parameter layout derived from the architecture alone."""
    spaces_ = [l.space for l in config.layers]
    s1 = spaces_[0].subpaint_dim
    layout = [
        ("Q", (spaces_[0].dim, config.input_dim)),
        ("lam", (max(s1 - 1, 0),)),
    ]
    for i in range(len(spaces_) - 1):
        si, so = spaces_[i].subpaint_dim, spaces_[i + 1].subpaint_dim
        layout.append((f"W{i}", (so, si)))
        layout.append((f"b{i}", (so,)))
        layout.append((f"psi{i}", (max(so - 1, 0),)))
    s_last = spaces_[-1].subpaint_dim
    if config.task in ("binary", "multiclass"):
        k = config.n_separators
        layout.append(("alpha", (k,)))
        layout.append(("beta", (k,)))
        layout.append(("w", (k, s_last)))
    else:
        layout.append(("v", (spaces_[-1].dim,)))
        layout.append(("c", (1,)))
    return tuple(layout)


def init_params(config: NetworkConfig, seed: int = 0) -> ParamSet:
    """Seeded initialization keeping Cartan coordinates small: uniform
    injection and homomorphism matrices, zero translations and angles."""
    rng = np.random.default_rng(seed)
    spaces_ = [l.space for l in config.layers]
    s = 1.0 / np.sqrt(config.input_dim)
    Q = rng.uniform(-s, s, size=(spaces_[0].dim, config.input_dim))
    lam = np.zeros(max(spaces_[0].subpaint_dim - 1, 0))
    Ws, bs, psis = [], [], []
    for i in range(len(spaces_) - 1):
        si, so = spaces_[i].subpaint_dim, spaces_[i + 1].subpaint_dim
        sw = 1.0 / np.sqrt(si)
        Ws.append(rng.uniform(-sw, sw, size=(so, si)))
        bs.append(np.zeros(so))
        psis.append(np.zeros(max(so - 1, 0)))
    s_last = spaces_[-1].subpaint_dim
    if config.task in ("binary", "multiclass"):
        k = config.n_separators
        head = {
            "alpha": np.zeros(k),
            "beta": np.zeros(k),
            "w": rng.uniform(-1.0, 1.0, size=(k, s_last)),
        }
        # keep separators admissible: unit-normalize the normal vectors
        head["w"] /= np.linalg.norm(head["w"], axis=1, keepdims=True)
    else:
        head = {
            "v": rng.uniform(-s, s, size=spaces_[-1].dim),
            "c": np.zeros(1),
        }
    return ParamSet(Q=Q, lam=lam, Ws=Ws, bs=bs, psis=psis, head=head)


def flatten(config: NetworkConfig, params: ParamSet) -> FlatParams:
    """Pack a ParamSet into a contiguous vector under the stable layout."""
    layout = layout_for(config)
    blocks = _named_blocks(params)
    parts = []
    for name, shape in layout:
        arr = np.asarray(blocks[name])
        if arr.shape != tuple(shape):
            raise ValueError(f"block {name}: expected shape {shape}, got {arr.shape}")
        parts.append(arr.reshape(-1))
    return FlatParams(vector=np.concatenate(parts), layout=layout)


def unflatten(config: NetworkConfig, flat) -> ParamSet:
    """Inverse of flatten; accepts a FlatParams or a bare vector."""
    layout = layout_for(config)
    vec = flat.vector if isinstance(flat, FlatParams) else np.asarray(flat)
    total = sum(int(np.prod(s, dtype=int)) for _, s in layout)
    if vec.shape != (total,):
        raise ValueError(f"expected parameter vector of length {total}")
    blocks, pos = {}, 0
    for name, shape in layout:
        size = int(np.prod(shape, dtype=int))
        blocks[name] = vec[pos : pos + size].reshape(shape)
        pos += size
    n_trans = len(config.layers) - 1
    head_keys = (
        ("alpha", "beta", "w") if config.task in ("binary", "multiclass")
        else ("v", "c")
    )
    return ParamSet(
        Q=blocks["Q"],
        lam=blocks["lam"],
        Ws=[blocks[f"W{i}"] for i in range(n_trans)],
        bs=[blocks[f"b{i}"] for i in range(n_trans)],
        psis=[blocks[f"psi{i}"] for i in range(n_trans)],
        head={k: blocks[k] for k in head_keys},
    )


def _named_blocks(params: ParamSet) -> dict:
    blocks = {"Q": params.Q, "lam": params.lam}
    for i, (W, b, p) in enumerate(zip(params.Ws, params.bs, params.psis)):
        blocks[f"W{i}"] = W
        blocks[f"b{i}"] = b
        blocks[f"psi{i}"] = p
    blocks.update(params.head)
    return blocks


# ---------------------------------------------------------------------------
# Forward evaluation
# ---------------------------------------------------------------------------

_FIBER_CACHE: dict = {}


def _fiber_generators(space: SpaceId):
    if space not in _FIBER_CACHE:
        _FIBER_CACHE[space] = [
            g.matrix for g in isometry.build_fiber_generators(space)
        ]
    return _FIBER_CACHE[space]


def _fiber_matrix(space: SpaceId, angles: np.ndarray) -> np.ndarray | None:
    """Product of the one-parameter fiber rotations, applied in index
    order (later generators multiply on the left)."""
    gens = _fiber_generators(space)
    if len(gens) == 0 or len(angles) == 0:
        return None
    g = None
    for a, F in zip(angles, gens):
        step = scipy.linalg.expm(a * F)
        g = step if g is None else step @ g
    return g


def _check_bound(values: np.ndarray):
    w1 = np.max(np.abs(np.real(values[..., 0]))) if values.size else 0.0
    if w1 > spaces.CARTAN_BOUND:
        raise CartanBoundError(
            f"Cartan coordinate {w1:.3g} exceeds bound {spaces.CARTAN_BOUND}"
        )


def _apply_fiber(space: SpaceId, values: np.ndarray, angles) -> np.ndarray:
    angles = np.asarray(angles)
    g = _fiber_matrix(space, angles)
    if g is None:
        return values
    return isometry._action_matrix_batch(g, space, values)


def _homo_batch(W, b, values):
    y1 = values[..., :1]
    sub = values[..., 1:] @ np.swapaxes(np.atleast_2d(W), -1, -2)
    sub = sub + (1.0 - np.exp(-y1)) * np.reshape(b, (1,) * (sub.ndim - 1) + (-1,))
    return np.concatenate([y1, sub], axis=-1)


def forward_batch(config: NetworkConfig, params: ParamSet, X: np.ndarray) -> np.ndarray:
    """Coordinates of the last hidden layer for a batch of inputs.

    Complex inputs/parameters propagate analytically, which is what makes
    complex-step differentiation of the whole chain exact."""
    X = np.asarray(X)
    if not np.all(np.isfinite(np.real(X))):
        raise ValueError("non-finite network input")
    if X.ndim == 1:
        X = X[None, :]
    values = X @ np.swapaxes(np.atleast_2d(params.Q), -1, -2)
    sp0 = config.layers[0].space
    _check_bound(values)
    values = _apply_fiber(sp0, values, params.lam)
    for i in range(len(config.layers) - 1):
        sp_next = config.layers[i + 1].space
        values = _homo_batch(params.Ws[i], params.bs[i], values)
        _check_bound(values)
        values = _apply_fiber(sp_next, values, params.psis[i])
    return values


def inject(space: SpaceId, Q: np.ndarray, lam, x) -> SolvCoords:
    """Linear injection followed by the layer-1 fiber-rotation isometries."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input vector")
    values = np.asarray(Q, dtype=float) @ x
    values = _apply_fiber(space, values[None, :], lam)[0]
    return SolvCoords(space, values)


def layer_forward(W, b, psi, coords: SolvCoords,
                  target: SpaceId | None = None) -> SolvCoords:
    """One transition: homomorphism, then the fiber rotations of the
    target layer.  No separate Paint rotation — it is absorbed into W."""
    out = homo.r1_homomorphism(W, b, coords, target)
    values = _apply_fiber(out.space, out.values[None, :], np.asarray(psi))[0]
    return SolvCoords(out.space, values)


def forward(config: NetworkConfig, params: ParamSet, x) -> SolvCoords:
    """Last-hidden-layer point for a single input vector."""
    values = forward_batch(config, params, np.asarray(x, dtype=float))[0]
    return SolvCoords(config.last_space, np.real_if_close(values).astype(float))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _config_doc(config: NetworkConfig) -> dict:
    return {
        "input_dim": config.input_dim,
        "layers": [{"r": l.space.r, "q": l.space.q} for l in config.layers],
        "task": config.task,
        "K": config.K,
    }


def _config_from_doc(doc: dict) -> NetworkConfig:
    layers = tuple(LayerSpec(SpaceId.so(l["r"], l["q"])) for l in doc["layers"])
    return NetworkConfig(
        input_dim=doc["input_dim"], layers=layers, task=doc["task"], K=doc["K"]
    )


def save_model(path, config: NetworkConfig, params: ParamSet):
    """Write the model as a versioned JSON document."""
    flat = flatten(config, params)
    doc = {
        "config": _config_doc(config),
        "flat_params": [float(v) for v in flat.vector],
        "layout": [[name, list(shape)] for name, shape in flat.layout],
        "format_version": FORMAT_VERSION,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model JSON document; returns (config, params)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError("unsupported model format version")
    config = _config_from_doc(doc["config"])
    layout = tuple((name, tuple(shape)) for name, shape in doc["layout"])
    if layout != layout_for(config):
        raise ValueError("model layout inconsistent with its config")
    params = unflatten(config, np.asarray(doc["flat_params"], dtype=float))
    return config, params
