"""Flat binary checkpoint container with reproducible bytes.

Avoids archive formats that embed timestamps: the same weights and config
always serialize to the same bytes.  A checkpoint carries a kind tag, its
config as canonical JSON, and name-sorted float32/int64 tensors.  Loading
verifies the kind and, when the caller supplies an expected config, the
config digest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import torch

_MAGIC = b"SMCKPT\x00"
_VERSION = 1

_DTYPES = {
    torch.float32: b"f4",
    torch.int64: b"i8",
    torch.float64: b"f8",
}
_DTYPE_BACK = {v: k for k, v in _DTYPES.items()}


class CheckpointError(ValueError):
    pass


class CheckpointKindError(CheckpointError):
    pass


class CheckpointConfigError(CheckpointError):
    pass


def canonical_config(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_config(config).encode()).hexdigest()


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_checkpoint(path: Path, kind: str, config: dict,
                    state: dict[str, torch.Tensor]) -> None:
    parts = [_MAGIC, struct.pack("<H", _VERSION), _pack_str(kind),
             _pack_str(canonical_config(config)),
             struct.pack("<I", len(state))]
    for name in sorted(state):
        tensor = state[name].detach().cpu().contiguous()
        if tensor.dtype not in _DTYPES:
            tensor = tensor.to(torch.float32)
        parts.append(_pack_str(name))
        parts.append(_DTYPES[tensor.dtype])
        parts.append(struct.pack("<B", tensor.dim()))
        parts.append(struct.pack(f"<{tensor.dim()}q", *tensor.shape))
        parts.append(tensor.numpy().tobytes())
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(b"".join(parts))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_str(self) -> str:
        (n,) = struct.unpack("<I", self.take(4))
        return self.take(n).decode("utf-8")


def load_checkpoint(path: Path, kind: str,
                    expected_config: dict | None = None
                    ) -> tuple[dict, dict[str, torch.Tensor]]:
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    if cur.take(len(_MAGIC)) != _MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    (version,) = struct.unpack("<H", cur.take(2))
    if version != _VERSION:
        raise CheckpointError(f"checkpoint v{version}, reader supports v{_VERSION}")
    found_kind = cur.take_str()
    if found_kind != kind:
        raise CheckpointKindError(
            f"{path} holds a {found_kind!r} checkpoint, expected {kind!r}")
    config_json = cur.take_str()
    config = json.loads(config_json)
    if expected_config is not None and config_digest(config) != config_digest(expected_config):
        raise CheckpointConfigError(
            f"{path} was written with a different config; "
            f"got {canonical_config(config)}, expected {canonical_config(expected_config)}")
    (n_tensors,) = struct.unpack("<I", cur.take(4))
    state = {}
    for _ in range(n_tensors):
        name = cur.take_str()
        dtype = _DTYPE_BACK[cur.take(2)]
        (ndim,) = struct.unpack("<B", cur.take(1))
        shape = struct.unpack(f"<{ndim}q", cur.take(8 * ndim))
        numel = 1
        for s in shape:
            numel *= s
        itemsize = torch.tensor([], dtype=dtype).element_size()
        raw = cur.take(numel * itemsize)
        state[name] = torch.frombuffer(bytearray(raw), dtype=dtype).reshape(shape).clone()
    if cur.pos != len(data):
        raise CheckpointError("trailing bytes after checkpoint payload")
    return config, state


def module_checksum(module: torch.nn.Module) -> str:
    """Digest of all parameters and buffers; detects accidental updates."""
    h = hashlib.sha256()
    state = module.state_dict()
    for name in sorted(state):
        h.update(name.encode())
        h.update(state[name].detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()
