"""Model assembly: parameter set, representations, attribute map, classifier.

A model for T domains holds three kinds of convolutional encoders — one
attribute-embedding block shared by all domains, one domain-independent
block, and one block per domain — plus the linear attribute map and the
per-branch linear classification heads. A point from domain t is represented
by the concatenation [shared; domain-t; attribute] and scored by the matching
heads; there is no bias term in the heads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .convnet import ConvBlock, conv_forward
from .numeric import Rng

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Dims:
    """Shape record: input rows d, attribute length A, classes Y, branch
    output sizes, filter window width w."""

    d: int
    a_dim: int
    y_dim: int
    m0: int
    ma: int
    mt: tuple[int, ...]  # one per domain; the last entry is the target domain
    w: int

    def __post_init__(self):
        fields = {"d": self.d, "a_dim": self.a_dim, "y_dim": self.y_dim,
                  "m0": self.m0, "ma": self.ma, "w": self.w}
        for name, v in fields.items():
            if int(v) < 1:
                raise ValueError(f"dimension {name} must be positive, got {v}")
        if len(self.mt) < 1 or any(int(m) < 1 for m in self.mt):
            raise ValueError(f"per-domain output sizes must be positive, got {self.mt}")
        object.__setattr__(self, "mt", tuple(int(m) for m in self.mt))

    @property
    def n_domains(self) -> int:
        return len(self.mt)


@dataclass
class ModelParams:
    """Full learnable parameter set.

    f_a / f_0: attribute and domain-independent encoders; f_dom[t] the
    domain-t encoder. theta maps binary attribute vectors into the attribute
    embedding space (shape A x ma, applied as theta.T @ a). u0/ua/u_dom[t]
    are the linear heads, each with y_dim columns.
    """

    dims: Dims
    f_a: ConvBlock
    f_0: ConvBlock
    f_dom: list[ConvBlock]
    theta: np.ndarray
    u0: np.ndarray
    ua: np.ndarray
    u_dom: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        d = self.dims
        if len(self.f_dom) != d.n_domains or len(self.u_dom) != d.n_domains:
            raise ValueError(
                f"expected {d.n_domains} domain blocks/heads, got "
                f"{len(self.f_dom)} blocks and {len(self.u_dom)} heads"
            )
        for name, block, m in (
            [("f_a", self.f_a, d.ma), ("f_0", self.f_0, d.m0)]
            + [(f"f_dom[{t}]", b, d.mt[t]) for t, b in enumerate(self.f_dom)]
        ):
            if block.d != d.d or block.m != m:
                raise ValueError(
                    f"{name} has shape (m={block.m}, d={block.d}), expected (m={m}, d={d.d})"
                )
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.u0 = np.asarray(self.u0, dtype=np.float64)
        self.ua = np.asarray(self.ua, dtype=np.float64)
        self.u_dom = [np.asarray(u, dtype=np.float64) for u in self.u_dom]
        checks = [("theta", self.theta, (d.a_dim, d.ma)),
                  ("u0", self.u0, (d.m0, d.y_dim)),
                  ("ua", self.ua, (d.ma, d.y_dim))]
        checks += [(f"u_dom[{t}]", u, (d.mt[t], d.y_dim)) for t, u in enumerate(self.u_dom)]
        for name, arr, shape in checks:
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")

    @property
    def n_domains(self) -> int:
        return self.dims.n_domains


@dataclass
class Representation:
    """Per-point branch outputs for domain t."""

    r0: np.ndarray
    rt: np.ndarray
    ra: np.ndarray
    t: int

    def concat(self) -> np.ndarray:
        return np.concatenate([self.r0, self.rt, self.ra])


def embed_attributes(theta: np.ndarray, a) -> np.ndarray:
    """theta.T @ a: the sum of the rows of theta selected by a's ones."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (theta.shape[0],):
        raise ValueError(
            f"attribute vector has shape {a.shape}, expected ({theta.shape[0]},)"
        )
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError("attribute vector entries must be 0 or 1")
    return theta.T @ a


def represent(params: ModelParams, x, t: int):
    """Run all three encoders on x for domain index t (0-based).

    Returns (Representation, (trace0, trace_t, trace_a)).
    """
    if not 0 <= t < params.n_domains:
        raise ValueError(f"domain index {t} out of range [0, {params.n_domains})")
    r0, tr0 = conv_forward(params.f_0, x)
    rt, trt = conv_forward(params.f_dom[t], x)
    ra, tra = conv_forward(params.f_a, x)
    return Representation(r0=r0, rt=rt, ra=ra, t=t), (tr0, trt, tra)


def classify(params: ModelParams, rep: Representation) -> np.ndarray:
    """Score vector u0.T r0 + u_t.T rt + ua.T ra (no bias)."""
    ut = params.u_dom[rep.t]
    if (rep.r0.shape != (params.u0.shape[0],)
            or rep.rt.shape != (ut.shape[0],)
            or rep.ra.shape != (params.ua.shape[0],)):
        raise ValueError(
            f"representation shapes {(rep.r0.shape, rep.rt.shape, rep.ra.shape)} "
            f"do not match heads {(params.u0.shape, ut.shape, params.ua.shape)}"
        )
    return params.u0.T @ rep.r0 + ut.T @ rep.rt + params.ua.T @ rep.ra


def predict(scores) -> int:
    """Argmax class index; ties break toward the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 1:
        raise ValueError(f"scores must be a non-empty vector, got shape {scores.shape}")
    return int(np.argmax(scores))


def init_params(dims: Dims, rng: Rng, scale: float = 0.1) -> ModelParams:
    """All parameters i.i.d. uniform in [-scale, scale]; deterministic per seed.

    Draw order is fixed (f_a, f_0, per-domain blocks, theta, u0, ua, heads)
    so a seed pins the full parameter set bit-exactly.
    """
    if scale <= 0:
        raise ValueError(f"init scale must be positive, got {scale}")

    def block(m):
        filters = rng.uniform(-scale, scale, (m, dims.d, dims.w))
        bias = rng.uniform(-scale, scale, (m,))
        return ConvBlock(filters=filters, bias=bias)

    f_a = block(dims.ma)
    f_0 = block(dims.m0)
    f_dom = [block(m) for m in dims.mt]
    theta = rng.uniform(-scale, scale, (dims.a_dim, dims.ma))
    u0 = rng.uniform(-scale, scale, (dims.m0, dims.y_dim))
    ua = rng.uniform(-scale, scale, (dims.ma, dims.y_dim))
    u_dom = [rng.uniform(-scale, scale, (m, dims.y_dim)) for m in dims.mt]
    return ModelParams(dims=dims, f_a=f_a, f_0=f_0, f_dom=f_dom,
                       theta=theta, u0=u0, ua=ua, u_dom=u_dom)


def _arr_entry(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _arr_load(entry: dict) -> np.ndarray:
    return np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])


def save_params(params: ModelParams, path: str) -> None:
    """Write a self-describing JSON document; load_params round-trips bit-exactly."""
    d = params.dims
    doc = {
        "format_version": FORMAT_VERSION,
        "dims": {"d": d.d, "a_dim": d.a_dim, "y_dim": d.y_dim,
                 "m0": d.m0, "ma": d.ma, "mt": list(d.mt), "w": d.w},
        "params": {
            "f_a.filters": _arr_entry(params.f_a.filters),
            "f_a.bias": _arr_entry(params.f_a.bias),
            "f_0.filters": _arr_entry(params.f_0.filters),
            "f_0.bias": _arr_entry(params.f_0.bias),
            "theta": _arr_entry(params.theta),
            "u0": _arr_entry(params.u0),
            "ua": _arr_entry(params.ua),
        },
    }
    for t in range(d.n_domains):
        doc["params"][f"f_dom.{t}.filters"] = _arr_entry(params.f_dom[t].filters)
        doc["params"][f"f_dom.{t}.bias"] = _arr_entry(params.f_dom[t].bias)
        doc["params"][f"u_dom.{t}"] = _arr_entry(params.u_dom[t])
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_params(path: str) -> ModelParams:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    dd = doc["dims"]
    dims = Dims(d=dd["d"], a_dim=dd["a_dim"], y_dim=dd["y_dim"],
                m0=dd["m0"], ma=dd["ma"], mt=tuple(dd["mt"]), w=dd["w"])
    p = doc["params"]
    f_dom = [ConvBlock(filters=_arr_load(p[f"f_dom.{t}.filters"]),
                       bias=_arr_load(p[f"f_dom.{t}.bias"]))
             for t in range(dims.n_domains)]
    u_dom = [_arr_load(p[f"u_dom.{t}"]) for t in range(dims.n_domains)]
    return ModelParams(
        dims=dims,
        f_a=ConvBlock(filters=_arr_load(p["f_a.filters"]), bias=_arr_load(p["f_a.bias"])),
        f_0=ConvBlock(filters=_arr_load(p["f_0.filters"]), bias=_arr_load(p["f_0.bias"])),
        f_dom=f_dom,
        theta=_arr_load(p["theta"]),
        u0=_arr_load(p["u0"]),
        ua=_arr_load(p["ua"]),
        u_dom=u_dom,
    )
