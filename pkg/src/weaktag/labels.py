"""Entity types and the BIO label inventories derived from them.

The strong label set contains O plus B-/I- labels for every entity type.
The weak label set additionally contains UN (token not annotated at all)
and B-NT/I-NT (mention boundary known, type unknown).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError

OUTSIDE = "O"
UNLABELED = "UN"
B_NO_TYPE = "B-NT"
I_NO_TYPE = "I-NT"
NO_TYPE = "NT"  # pseudo-type returned when induction cannot decide a type


@dataclass(frozen=True)
class TypeSystem:
    """Ordered entity types plus the derived label inventories."""

    types: tuple[str, ...]
    labels: tuple[str, ...]
    weak_labels: tuple[str, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    def label_index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ConfigurationError(f"label {label!r} is not in the label set") from None

    def begin(self, type_name: str) -> str:
        if type_name not in self.types:
            raise ConfigurationError(f"unknown entity type {type_name!r}")
        return f"B-{type_name}"

    def inside(self, type_name: str) -> str:
        if type_name not in self.types:
            raise ConfigurationError(f"unknown entity type {type_name!r}")
        return f"I-{type_name}"

    def is_strong(self, label: str) -> bool:
        """True for labels in the strong inventory (O and typed B/I)."""
        return label in self._index


def build_label_set(types: list[str] | tuple[str, ...]) -> TypeSystem:
    """Derive the label inventories from an ordered list of entity types.

    Label order is deterministic: O first, then B-t/I-t in type order.
    """
    types = tuple(types)
    if not types:
        raise ConfigurationError("at least one entity type is required")
    if len(set(types)) != len(types):
        raise ConfigurationError(f"duplicate entity types in {types}")
    for t in types:
        if not t or t == NO_TYPE:
            raise ConfigurationError(f"invalid entity type name {t!r}")
    labels = [OUTSIDE]
    for t in types:
        labels.append(f"B-{t}")
        labels.append(f"I-{t}")
    weak = tuple(labels) + (UNLABELED, B_NO_TYPE, I_NO_TYPE)
    index = {lab: i for i, lab in enumerate(labels)}
    return TypeSystem(types=types, labels=tuple(labels), weak_labels=weak, _index=index)
