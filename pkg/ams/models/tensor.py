"""
Dense tensor and parameter types.

A Tensor is a float64 numpy array in row-major order; Parameter pairs a
value tensor with an additively accumulated gradient of the same shape.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence
import itertools

import numpy as np
from numpy.typing import NDArray

from ams.exceptions import DimensionError, NumericError

Tensor = NDArray[np.float64]

_param_ids = itertools.count()


def as_tensor(data: Any, shape: Optional[Sequence[int]] = None,
              checked: bool = True) -> Tensor:
    """
    Build a float64 tensor from array-like data.

    Args:
        data: Nested lists, scalars or an existing array
        shape: Optional target shape; data length must equal its product
        checked: Reject NaN/Inf values

    Returns:
        Contiguous float64 array

    Raises:
        DimensionError: If the data length does not match shape
        NumericError: If checked and any value is non-finite
    """
    arr = np.array(data, dtype=np.float64, order='C')
    if shape is not None:
        expected = int(np.prod(shape)) if len(shape) else 1
        if arr.size != expected:
            raise DimensionError(
                f"data length {arr.size} does not match shape {tuple(shape)}")
        arr = arr.reshape(tuple(shape))
    if checked:
        check_finite(arr, "tensor")
    return arr


def check_finite(values: Any, what: str = "value") -> None:
    """Raise NumericError if any entry of values is NaN or infinite."""
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite {what}")


@dataclass(eq=False)
class Parameter:
    """
    Trainable tensor with its gradient accumulator.

    The value array may be a view into a larger flat buffer; optimizers
    update it in place so such views stay attached.
    """
    name: str
    value: Tensor
    grad: Tensor = field(default=None)  # type: ignore[assignment]
    id: int = field(default_factory=lambda: next(_param_ids))

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        elif self.grad.shape != self.value.shape:
            raise DimensionError(
                f"grad shape {self.grad.shape} differs from value shape {self.value.shape}")

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def accumulate(self, delta: Tensor) -> None:
        if delta.shape != self.value.shape:
            raise DimensionError(
                f"{self.name}: gradient shape {delta.shape} != {self.value.shape}")
        self.grad += delta

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'shape': list(self.value.shape),
                'value': self.value.ravel().tolist()}

    def load_dict(self, data: Dict[str, Any]) -> None:
        """Overwrite the value in place from a to_dict payload."""
        values = as_tensor(data['value'], shape=self.value.shape)
        self.value[...] = values


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()
