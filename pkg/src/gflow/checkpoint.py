"""Versioned binary container for checkpoints and datasets.

Layout (all integers little-endian):

    magic   b"GFCK"
    u32     format_version (currently 1)
    u64     header length, then that many bytes of UTF-8 JSON
    u32     number of arrays, then per array:
              u16 name length, name bytes,
              u8 dtype code (0 = float64, 1 = int64),
              u8 ndim, u64 per dimension,
              raw little-endian array bytes

The JSON header is serialized with sorted keys; floats use repr so the
whole file round-trips byte-exactly through load_container/save_container.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GFCK"
FORMAT_VERSION = 1

_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}
_DTYPE_CODES = {np.dtype("float64"): 0, np.dtype("int64"): 1}


def save_container(path, header: dict, arrays: dict) -> None:
    header = dict(header)
    header.setdefault("format_version", FORMAT_VERSION)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            # asarray with order="C", not ascontiguousarray: the latter
            # silently promotes 0-d arrays to shape (1,)
            arr = np.asarray(arrays[name], order="C")
            if arr.dtype not in _DTYPE_CODES:
                raise ValueError(f"unsupported dtype {arr.dtype} for array {name!r}")
            name_bytes = name.encode("utf-8")
            f.write(struct.pack("<H", len(name_bytes)))
            f.write(name_bytes)
            f.write(struct.pack("<B", _DTYPE_CODES[arr.dtype]))
            f.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<Q", dim))
            f.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load_container(path):
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a gflow container")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        (n_arrays,) = struct.unpack("<I", f.read(4))
        arrays = {}
        for _ in range(n_arrays):
            (nlen,) = struct.unpack("<H", f.read(2))
            name = f.read(nlen).decode("utf-8")
            (code,) = struct.unpack("<B", f.read(1))
            (ndim,) = struct.unpack("<B", f.read(1))
            shape = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(ndim))
            dtype = _DTYPES[code]
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(count * dtype.itemsize), dtype=dtype)
            arrays[name] = data.reshape(shape).astype(dtype.newbyteorder("="))
    return header, arrays


def rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": str(state["state"]["state"]),
        "inc": str(state["state"]["inc"]),
        "has_uint32": state["has_uint32"],
        "uinteger": state["uinteger"],
    }


def restore_rng(state: dict) -> np.random.Generator:
    if state["bit_generator"] != "PCG64":
        raise ValueError(f"unsupported bit generator {state['bit_generator']!r}")
    rng = np.random.default_rng(0)
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(state["state"]), "inc": int(state["inc"])},
        "has_uint32": state["has_uint32"],
        "uinteger": state["uinteger"],
    }
    return rng
