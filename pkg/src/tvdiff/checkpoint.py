"""Binary checkpoint container.

Layout (all integers little-endian):

    offset  size  field
    0       8     magic  b"TVDIFFCK"
    8       4     uint32 format version (currently 1)
    12      4     uint32 kind: 1 = denoiser, 2 = matrix factorization
    16      32    kind 1: uint64 m, n, T, d
                  kind 2: uint64 m, n, 0, d
    48      ...   float64 little-endian matrices, row-major, back to back:
                  kind 1: W_I [n x d], W_U [m x d], E_time [(T+1) x d]
                  kind 2: E_U [m x d], E_I [n x d]
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"TVDIFFCK"
VERSION = 1
KIND_DENOISER = 1
KIND_MF = 2
_HEADER = struct.Struct("<8sII4Q")


class CheckpointError(IOError):
    pass


def _shapes(kind, m, n, T, d):
    if kind == KIND_DENOISER:
        return [("W_I", (n, d)), ("W_U", (m, d)), ("E_time", (T + 1, d))]
    if kind == KIND_MF:
        return [("E_U", (m, d)), ("E_I", (n, d))]
    raise CheckpointError(f"unknown checkpoint kind {kind}")


def save_arrays(path, kind: int, dims: tuple[int, int, int, int], arrays: dict) -> None:
    m, n, T, d = dims
    chunks = [_HEADER.pack(MAGIC, VERSION, kind, m, n, T, d)]
    for name, shape in _shapes(kind, m, n, T, d):
        arr = np.asarray(arrays[name])
        if arr.shape != shape:
            raise CheckpointError(f"{name} has shape {arr.shape}, expected {shape}")
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        for c in chunks:
            fh.write(c)
    os.replace(tmp, path)


def load_arrays(path) -> tuple[int, tuple[int, int, int, int], dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, kind, m, n, T, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}, expected {VERSION}")
    arrays = {}
    offset = _HEADER.size
    for name, shape in _shapes(kind, m, n, T, d):
        size = int(np.prod(shape)) * 8
        if offset + size > len(blob):
            raise CheckpointError(f"{path}: truncated while reading {name}")
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=int(np.prod(shape)), offset=offset).reshape(shape).astype(np.float64)
        offset += size
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return kind, (m, n, T, d), arrays


def save_denoiser(params, path) -> None:
    save_arrays(path, KIND_DENOISER, params.shape, params.arrays())


def load_denoiser(path):
    from .denoiser import DenoiserParams

    kind, _, arrays = load_arrays(path)
    if kind != KIND_DENOISER:
        raise CheckpointError(f"{path}: holds kind {kind}, not a denoiser")
    return DenoiserParams(arrays["W_I"], arrays["W_U"], arrays["E_time"])


def checkpoint_io(params, path, mode: str):
    """``mode='save'`` writes ``params`` and returns them; ``'load'`` reads them back."""
    if mode == "save":
        save_denoiser(params, path)
        return params
    if mode == "load":
        return load_denoiser(path)
    raise ValueError(f"mode must be 'save' or 'load', got {mode!r}")
