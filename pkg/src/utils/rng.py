from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.utils.errors import ContractError

_MODULE = "core-random"
_U64 = 2**64


@dataclass(frozen=True)
class ExpRate:
    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ContractError(_MODULE, f"rate must be > 0, got {self.rate}")


def exp_from_uniform(u, rate: float):
    return -np.log1p(-np.asarray(u, dtype=np.float64)) / rate


class RngStream:
    """Philox stream keyed by (master_seed, namespace, replica_index, *tags)."""

    def __init__(self, master_seed: int, replica_index: int, namespace: int = 0, tags: tuple[int, ...] = ()) -> None:
        for name, value in (("master_seed", master_seed), ("replica_index", replica_index), ("namespace", namespace)):
            if not 0 <= int(value) < _U64:
                raise ContractError(_MODULE, f"{name} must be a 64-bit unsigned integer, got {value}")
        self.master_seed = int(master_seed)
        self.replica_index = int(replica_index)
        self.namespace = int(namespace)
        self._tags = tuple(int(tag) for tag in tags)
        sequence = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.namespace, self.replica_index) + self._tags,
        )
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def child(self, tag: int) -> "RngStream":
        return RngStream(self.master_seed, self.replica_index, self.namespace, self._tags + (tag,))

    def uniform(self, size=None):
        return self._generator.random(size)

    def exponential(self, rate: float, size=None):
        if size is None:
            return float(exp_from_uniform(self.uniform(), rate))
        return exp_from_uniform(self.uniform(size), rate)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, replica_index={self.replica_index}, namespace={self.namespace}, tags={self._tags})"


def make_stream(master_seed: int, replica_index: int, namespace: int = 0) -> RngStream:
    return RngStream(master_seed, replica_index, namespace)


def sample_exp(stream: RngStream, rate: ExpRate) -> float:
    return float(exp_from_uniform(stream.uniform(), rate.rate))
