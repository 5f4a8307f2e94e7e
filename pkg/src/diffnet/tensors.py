"""
Named parameter bundles
"""
from collections.abc import Mapping
from typing import Dict, Iterator, Tuple

import numpy as np
import torch.nn as nn

from ..utils.errors import ValidationError


class TensorBundle(Mapping):
    """Immutable name -> float32 array map holding every trainable weight of a model"""

    def __init__(self, tensors: Mapping):
        self._tensors: Dict[str, np.ndarray] = {}
        for name, value in tensors.items():
            array = np.array(value, dtype=np.float32, copy=True)
            if not np.all(np.isfinite(array)):
                raise ValidationError(f"tensor '{name}' has non-finite values")
            array.setflags(write=False)
            self._tensors[str(name)] = array

    @classmethod
    def from_module(cls, module: nn.Module) -> "TensorBundle":
        return cls({
            name: tensor.detach().cpu().float().numpy()
            for name, tensor in module.state_dict().items()
        })

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: array.shape for name, array in self._tensors.items()}

    def equals(self, other: "TensorBundle") -> bool:
        """Bit-exact comparison"""
        if list(self) != list(other):
            return False
        return all(
            self[name].shape == other[name].shape
            and self[name].tobytes() == other[name].tobytes()
            for name in self
        )

    def __repr__(self) -> str:
        return f"<TensorBundle(tensors={len(self)}, values={sum(a.size for a in self._tensors.values())})>"
