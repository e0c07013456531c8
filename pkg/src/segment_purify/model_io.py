"""Binary container for fitted models (SPMD format).

Layout, little-endian: magic ``SPMD``, u32 version, u32 kind, u32 header
count, header u32s (kind-specific dimensions), then float64 parameter
blocks in a fixed order per kind.
"""

from __future__ import annotations

import struct

import numpy as np

from .gmm import GmmModel
from .models import LinearModel, SvrModel
from .pca import PcaModel

MAGIC = b"SPMD"
VERSION = 1
KIND_PCA = 1
KIND_GMM = 2
KIND_LSSVM = 3
KIND_SVR = 4
_PREFIX = struct.Struct("<4sIII")


def save_model(path, model) -> None:
    if isinstance(model, PcaModel):
        kind = KIND_PCA
        header = (model.input_dim, model.output_dim)
        blocks = (model.mean, model.components.ravel(), model.eigenvalues)
    elif isinstance(model, GmmModel):
        kind = KIND_GMM
        header = (model.k, model.dim)
        blocks = (model.weights, model.means.ravel(), model.variances.ravel())
    elif isinstance(model, LinearModel):
        kind = KIND_LSSVM
        header = (model.dim,)
        blocks = (np.array([model.gamma, model.b]), model.w)
    elif isinstance(model, SvrModel):
        kind = KIND_SVR
        header = (len(model.u),)
        blocks = (np.array([model.lam]), model.u)
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, kind, len(header)))
        fh.write(struct.pack(f"<{len(header)}I", *header))
        for block in blocks:
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_model(path):
    with open(path, "rb") as fh:
        prefix = fh.read(_PREFIX.size)
        if len(prefix) < _PREFIX.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, kind, n_header = _PREFIX.unpack(prefix)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a model file (bad magic)")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        header = struct.unpack(f"<{n_header}I", fh.read(4 * n_header))
        payload = np.frombuffer(fh.read(), dtype="<f8")

    def take(n, offset=[0]):  # noqa: B006 - cursor shared across calls
        chunk = payload[offset[0] : offset[0] + n]
        if len(chunk) != n:
            raise ValueError(f"{path}: truncated parameter block")
        offset[0] += n
        return chunk.astype(np.float64)

    if kind == KIND_PCA:
        D, d = header
        return PcaModel(
            mean=take(D),
            components=take(d * D).reshape(d, D),
            eigenvalues=take(d),
        )
    if kind == KIND_GMM:
        k, d = header
        return GmmModel(
            weights=take(k),
            means=take(k * d).reshape(k, d),
            variances=take(k * d).reshape(k, d),
        )
    if kind == KIND_LSSVM:
        (D,) = header
        meta = take(2)
        return LinearModel(w=take(D), b=float(meta[1]), gamma=float(meta[0]))
    if kind == KIND_SVR:
        (D,) = header
        meta = take(1)
        return SvrModel(u=take(D), lam=float(meta[0]))
    raise ValueError(f"{path}: unknown model kind {kind}")
