import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from exceptions import BadMagic, IoFailure, Truncated, VersionMismatch
from models import Checkpoint, LayerKind, LayerSpec
from services.network_service import Network

logger = logging.getLogger(__name__)

MAGIC = b"FSER"
CHECKPOINT_VERSION = 1

_U32 = struct.Struct("<I")
# kind, out_channels, kernel, stride, padding, window, rate, out_features
_LAYER = struct.Struct("<BIIIIIdI")

PathLike = Union[str, Path]


class _Reader:
    def __init__(self, raw: bytes, path: str):
        self.raw = raw
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.raw):
            raise Truncated(f"needed {size} bytes at offset {self.offset}, file has {len(self.raw)}",
                            path=self.path)
        chunk = self.raw[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]


class CheckpointService:
    """Binary model snapshots: magic, version, epoch, RNG state, layer table, tensors"""

    @staticmethod
    def from_network(network: Network, epoch: int = 0) -> Checkpoint:
        return Checkpoint(
            version=CHECKPOINT_VERSION,
            layers=network.layer_specs(),
            tensors=[p.copy() for p in network.parameters()],
            epoch=epoch,
            rng_state=network.rng_state(),
        )

    @staticmethod
    def to_network(checkpoint: Checkpoint) -> Network:
        return Network.from_specs(checkpoint.layers, [t.copy() for t in checkpoint.tensors],
                                  rng_state=checkpoint.rng_state)

    @staticmethod
    def encode(checkpoint: Checkpoint) -> bytes:
        rng_state = checkpoint.rng_state.encode("utf-8")
        parts = [
            MAGIC,
            _U32.pack(checkpoint.version),
            _U32.pack(checkpoint.epoch),
            _U32.pack(len(rng_state)),
            rng_state,
            _U32.pack(len(checkpoint.layers)),
        ]
        for spec in checkpoint.layers:
            parts.append(_LAYER.pack(int(spec.kind), spec.out_channels, spec.kernel, spec.stride,
                                     spec.padding, spec.window, spec.rate, spec.out_features))
        parts.append(_U32.pack(len(checkpoint.tensors)))
        for tensor in checkpoint.tensors:
            parts.append(_U32.pack(tensor.ndim))
            parts.extend(_U32.pack(d) for d in tensor.shape)
            parts.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
        return b"".join(parts)

    @staticmethod
    def decode(raw: bytes, path: str = "") -> Checkpoint:
        reader = _Reader(raw, path)
        if raw[:len(MAGIC)] != MAGIC:
            raise BadMagic(f"expected magic {MAGIC!r}, got {raw[:len(MAGIC)]!r}", path=path or None)
        reader.take(len(MAGIC))
        version = reader.u32()
        if version != CHECKPOINT_VERSION:
            raise VersionMismatch(f"checkpoint version {version}, this build reads {CHECKPOINT_VERSION}",
                                  path=path or None)

        epoch = reader.u32()
        state_offset = reader.offset
        try:
            rng_state = reader.take(reader.u32()).decode("utf-8")
        except UnicodeDecodeError:
            raise BadMagic(f"RNG state at offset {state_offset} is not UTF-8", path=path or None)

        layers = []
        for _ in range(reader.u32()):
            entry_offset = reader.offset
            kind, out_channels, kernel, stride, padding, window, rate, out_features = \
                _LAYER.unpack(reader.take(_LAYER.size))
            try:
                layers.append(LayerSpec(kind=LayerKind(kind), out_channels=out_channels, kernel=kernel,
                                        stride=stride, padding=padding, window=window, rate=rate,
                                        out_features=out_features))
            except ValueError as e:
                raise BadMagic(f"invalid layer entry at offset {entry_offset}: {e}", path=path or None)

        tensors = []
        for _ in range(reader.u32()):
            shape = tuple(reader.u32() for _ in range(reader.u32()))
            count = int(np.prod(shape, dtype=np.int64))
            data = np.frombuffer(reader.take(8 * count), dtype="<f8")
            tensors.append(data.astype(np.float64).reshape(shape))

        if reader.offset != len(raw):
            raise Truncated(f"{len(raw) - reader.offset} unexpected bytes after the last tensor", path=path or None)
        return Checkpoint(version=version, layers=layers, tensors=tensors, epoch=epoch, rng_state=rng_state)

    @staticmethod
    def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> None:
        """Atomic write (temp file + rename)"""
        path = Path(path)
        payload = CheckpointService.encode(checkpoint)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as handle:
                    handle.write(payload)
                os.replace(tmp_name, path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as e:
            raise IoFailure(f"cannot write checkpoint: {e.strerror}", path=str(path))
        logger.info(f"Saved checkpoint at epoch {checkpoint.epoch} to {path} ({len(payload)} bytes)")

    @staticmethod
    def load_checkpoint(path: PathLike) -> Checkpoint:
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise IoFailure(f"cannot read checkpoint: {e.strerror}", path=str(path))
        return CheckpointService.decode(raw, str(path))
