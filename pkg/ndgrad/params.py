from __future__ import annotations

from typing import Dict, Iterable, Iterator, List, Optional

import numpy as np

from ndgrad.errors import ShapeMismatchError

# 参数名的第一段表示归属: actor / critic / shared
OWNERS = ("actor", "critic", "shared")


class ParamTree:
    """
    Ordered collection of named parameter arrays and their gradients.

    Names are dotted paths whose first segment is the owner of the entry:
    ``actor.*`` and ``critic.*`` entries belong to one side only, ``shared.*``
    entries feed both (shared trunk). Iteration order is insertion order.
    """

    def __init__(self):
        self._values: Dict[str, np.ndarray] = {}
        self._grads: Dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> None:
        """
        Registers a new entry with a zero gradient.

        Args:
            name: Unique dotted name, starting with an owner segment.
            value: Initial value; copied and stored as float64.
        """
        if name in self._values:
            raise KeyError(f"Parameter '{name}' already exists")
        if name.split(".", 1)[0] not in OWNERS:
            raise ValueError(f"Parameter '{name}' must start with one of {OWNERS}")
        array = np.array(value, dtype=np.float64)
        self._values[name] = array
        self._grads[name] = np.zeros_like(array)

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    @staticmethod
    def owner(name: str) -> str:
        return name.split(".", 1)[0]

    def names(self, owners: Optional[Iterable[str]] = None) -> List[str]:
        """Returns entry names in insertion order, optionally restricted to some owners."""
        if owners is None:
            return list(self._values)
        wanted = set(owners)
        return [name for name in self._values if self.owner(name) in wanted]

    def actor_names(self) -> List[str]:
        return self.names(("actor", "shared"))

    def critic_names(self) -> List[str]:
        return self.names(("critic", "shared"))

    def value(self, name: str) -> np.ndarray:
        return self._values[name]

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def set_value(self, name: str, value: np.ndarray) -> None:
        array = np.asarray(value, dtype=np.float64)
        if array.shape != self._values[name].shape:
            raise ShapeMismatchError(
                f"set_value[{name}]", self._values[name].shape, array.shape
            )
        self._values[name] = array.copy()

    def accumulate_grad(self, name: str, grad: np.ndarray) -> None:
        if grad.shape != self._grads[name].shape:
            raise ShapeMismatchError(
                f"accumulate_grad[{name}]", self._grads[name].shape, grad.shape
            )
        self._grads[name] = self._grads[name] + grad

    def zero_grad(self, names: Optional[Iterable[str]] = None) -> None:
        for name in self._values if names is None else names:
            self._grads[name] = np.zeros_like(self._values[name])

    def grads(self, names: Optional[Iterable[str]] = None) -> Dict[str, np.ndarray]:
        """Returns a copy of the gradients, keyed by name."""
        selected = self._values if names is None else names
        return {name: self._grads[name].copy() for name in selected}

    def set_grads(self, grads: Dict[str, np.ndarray]) -> None:
        for name, grad in grads.items():
            if grad.shape != self._values[name].shape:
                raise ShapeMismatchError(
                    f"set_grads[{name}]", self._values[name].shape, grad.shape
                )
            self._grads[name] = np.array(grad, dtype=np.float64)

    def global_grad_norm(self, names: Optional[Iterable[str]] = None) -> float:
        selected = self._values if names is None else names
        total = 0.0
        for name in selected:
            total += float(np.sum(self._grads[name] * self._grads[name]))
        return float(np.sqrt(total))

    def num_parameters(self, names: Optional[Iterable[str]] = None) -> int:
        selected = self._values if names is None else names
        return int(sum(self._values[name].size for name in selected))

    def copy(self) -> "ParamTree":
        clone = ParamTree()
        for name in self._values:
            clone._values[name] = self._values[name].copy()
            clone._grads[name] = self._grads[name].copy()
        clone.step_count = self.step_count
        return clone

    def assign(self, other: "ParamTree") -> None:
        """Overwrites values, gradients and step count with those of ``other``."""
        if list(other._values) != list(self._values):
            raise KeyError("Cannot assign a ParamTree with different entries")
        for name in self._values:
            self._values[name] = other._values[name].copy()
            self._grads[name] = other._grads[name].copy()
        self.step_count = other.step_count

    def __repr__(self) -> str:
        return f"ParamTree(entries={len(self)}, parameters={self.num_parameters()})"
