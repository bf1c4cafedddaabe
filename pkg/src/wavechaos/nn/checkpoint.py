"""Binary checkpoint format.

Little-endian layout:

    magic  b"WVCK"
    u32    format version (1)
    32B    sha256 of the canonical spec JSON
    u64    training seed
    u32    epoch counter
    u32    tensor record count
    then per tensor: u32 rank, u32 x rank dims, float64 x prod(dims) data

Tensor order is fixed: trainable parameters in network traversal order,
then persistent layer state (batch-norm running statistics), then one
optimizer velocity per trainable parameter.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, InvalidInputError
from .network import Network, NetworkSpec

MAGIC = b"WVCK"
VERSION = 1


@dataclass
class Checkpoint:
    spec: NetworkSpec
    seed: int
    epoch: int
    tensors: list[np.ndarray]

    @classmethod
    def capture(cls, network: Network, velocities, seed: int, epoch: int):
        params = [p for _, p in network.param_items()]
        state = [s for _, s in network.state_items()]
        if len(velocities) != len(params):
            raise InvalidInputError("one velocity tensor per parameter required")
        tensors = [t.copy() for t in params + state + velocities]
        return cls(spec=network.spec, seed=seed, epoch=epoch, tensors=tensors)

    def restore(self) -> tuple[Network, list[np.ndarray]]:
        """Rebuild a network (and velocities) carrying these tensors."""
        network = Network(self.spec, seed=self.seed)
        params = network.param_items()
        state = network.state_items()
        n_p, n_s = len(params), len(state)
        if len(self.tensors) != 2 * n_p + n_s:
            raise FormatError(
                f"checkpoint holds {len(self.tensors)} tensors, "
                f"expected {2 * n_p + n_s}"
            )
        for (_, dst), src in zip(params + state, self.tensors[: n_p + n_s]):
            if dst.shape != src.shape:
                raise FormatError(f"tensor shape {src.shape} != expected {dst.shape}")
            dst[:] = src
        velocities = [t.copy() for t in self.tensors[n_p + n_s :]]
        return network, velocities

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", VERSION))
            fh.write(self.spec.hash())
            fh.write(struct.pack("<QI", self.seed & 0xFFFFFFFFFFFFFFFF, self.epoch))
            fh.write(struct.pack("<I", len(self.tensors)))
            for t in self.tensors:
                fh.write(struct.pack("<I", t.ndim))
                fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
                fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, spec: NetworkSpec) -> "Checkpoint":
        path = Path(path)
        data = path.read_bytes()
        pos = 0

        def take(n):
            nonlocal pos
            if pos + n > len(data):
                raise FormatError(f"checkpoint truncated in {path.name}", pos)
            chunk = data[pos : pos + n]
            pos += n
            return chunk

        if take(4) != MAGIC:
            raise FormatError(f"{path.name} is not a checkpoint file", 0)
        (version,) = struct.unpack("<I", take(4))
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version}", 4)
        spec_hash = take(32)
        if spec_hash != spec.hash():
            raise FormatError(
                f"checkpoint spec hash does not match the provided spec in {path.name}"
            )
        seed, epoch = struct.unpack("<QI", take(12))
        (count,) = struct.unpack("<I", take(4))
        tensors = []
        for _ in range(count):
            (rank,) = struct.unpack("<I", take(4))
            dims = struct.unpack(f"<{rank}I", take(4 * rank))
            n = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(take(8 * n), dtype="<f8").reshape(dims).copy()
            tensors.append(arr)
        return cls(spec=spec, seed=seed, epoch=epoch, tensors=tensors)
