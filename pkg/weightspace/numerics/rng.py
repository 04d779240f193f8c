__all__ = ["Rng"]

import numpy as np
import torch
from numpy.typing import NDArray


class Rng:
    """
    Counter-based random stream keyed by (seed, stream).

    The Philox bit generator gives the same draw sequence for the same key on every platform, and giving each
    instance its own stream id keeps parallel fits reproducible regardless of scheduling order.
    """

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.seed = int(seed)
        self.stream = int(stream)
        self._generator = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, self.stream])))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"

    def spawn(self, stream: int) -> "Rng":
        """A new independent stream under the same seed."""
        return Rng(self.seed, stream)

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def normal(self, shape: int | tuple[int, ...], std: float = 1.0) -> NDArray[np.float32]:
        return (self._generator.standard_normal(shape) * std).astype(np.float32)

    def uniform(self, low: float, high: float, shape: int | tuple[int, ...]) -> NDArray[np.float32]:
        return self._generator.uniform(low, high, shape).astype(np.float32)

    def integers(self, high: int, shape: int | tuple[int, ...]) -> NDArray[np.int64]:
        return self._generator.integers(0, high, shape, dtype=np.int64)

    def choice_without_replacement(self, population: int, count: int) -> NDArray[np.int64]:
        return self._generator.choice(population, size=count, replace=False).astype(np.int64)

    def permutation(self, n: int) -> NDArray[np.int64]:
        return self._generator.permutation(n).astype(np.int64)

    def torch_normal(self, shape: tuple[int, ...], std: float = 1.0) -> torch.Tensor:
        return torch.from_numpy(self.normal(shape, std))

    def torch_seed(self) -> int:
        """A seed for torch-side initialisation (module construction) drawn from this stream."""
        return int(self._generator.integers(0, 2**62))
