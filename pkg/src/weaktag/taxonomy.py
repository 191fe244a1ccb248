"""Category taxonomy traversal and entity-type induction.

An entity's category set is resolved to an entity type by counting how many
of its categories fall under each type's root category (transitively along
parent->child edges) and taking the type with the highest fraction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigurationError, DataError, UnknownCategoryError
from .labels import NO_TYPE, TypeSystem


class TaxonomyGraph:
    """Directed category graph with parent->child edges.

    Wikipedia-style category graphs contain cycles, so all traversals are
    visited-set guarded. Descendant sets are cached per queried root because
    induction evaluates them once per anchor over whole corpora.
    """

    def __init__(self, categories, child_edges):
        self.categories: frozenset[str] = frozenset(categories)
        self._children: dict[str, tuple[str, ...]] = {}
        for parent, children in dict(child_edges).items():
            if parent not in self.categories:
                raise DataError(f"edge parent {parent!r} is not a known category")
            for child in children:
                if child not in self.categories:
                    raise DataError(f"edge child {child!r} is not a known category")
            self._children[parent] = tuple(children)
        self._descendant_cache: dict[str, frozenset[str]] = {}

    @classmethod
    def from_edges(cls, edges) -> "TaxonomyGraph":
        """Build a graph from (parent, child) pairs; nodes are inferred."""
        categories = set()
        adjacency: dict[str, list[str]] = {}
        for parent, child in edges:
            categories.add(parent)
            categories.add(child)
            adjacency.setdefault(parent, []).append(child)
        return cls(categories, adjacency)

    def __contains__(self, category: str) -> bool:
        return category in self.categories

    def children(self, category: str) -> tuple[str, ...]:
        if category not in self.categories:
            raise UnknownCategoryError(f"unknown category {category!r}")
        return self._children.get(category, ())

    def descendants(self, root: str) -> frozenset[str]:
        """All categories reachable from ``root``, including ``root`` itself."""
        if root not in self.categories:
            raise UnknownCategoryError(f"unknown category {root!r}")
        cached = self._descendant_cache.get(root)
        if cached is not None:
            return cached
        seen = {root}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for child in self._children.get(node, ()):
                if child not in seen:
                    seen.add(child)
                    queue.append(child)
        result = frozenset(seen)
        self._descendant_cache[root] = result
        return result


def is_descendant(taxonomy: TaxonomyGraph, category: str, root: str) -> bool:
    """True iff ``category`` equals ``root`` or is reachable from it."""
    if category not in taxonomy:
        raise UnknownCategoryError(f"unknown category {category!r}")
    return category in taxonomy.descendants(root)


@dataclass(frozen=True)
class GammaMapping:
    """Hand-defined map from entity type name to its root category."""

    roots: dict[str, str]

    def root(self, type_name: str) -> str:
        try:
            return self.roots[type_name]
        except KeyError:
            raise ConfigurationError(f"no root category mapped for type {type_name!r}") from None

    def validate(self, type_system: TypeSystem, taxonomy: TaxonomyGraph) -> None:
        for t in type_system.types:
            if t not in self.roots:
                raise ConfigurationError(f"type {t!r} has no root category mapping")
            if self.roots[t] not in taxonomy:
                raise ConfigurationError(
                    f"root category {self.roots[t]!r} for type {t!r} is not in the taxonomy"
                )


@dataclass
class EntityCatalog:
    """Map from entity id to its (possibly empty) category set."""

    categories: dict[str, frozenset[str]] = field(default_factory=dict)
    dropped_category_count: int = 0

    def category_set(self, entity_id: str) -> frozenset[str] | None:
        """Categories of an entity, or None when the entity is unknown."""
        return self.categories.get(entity_id)


def induce_entity_type(
    cats,
    taxonomy: TaxonomyGraph,
    gamma: GammaMapping,
    type_system: TypeSystem,
) -> tuple[str, float]:
    """Resolve a category set to an entity type.

    Returns the type whose root category covers the largest fraction of
    ``cats``, together with that fraction. Ties break by type order. An
    empty set, or one with no category under any root, yields (NT, 0.0).
    Categories unknown to the taxonomy contribute nothing but still count
    in the denominator.
    """
    cats = frozenset(cats)
    if not cats:
        return NO_TYPE, 0.0
    best_type = NO_TYPE
    best_count = 0
    for t in type_system.types:
        covered = taxonomy.descendants(gamma.root(t))
        count = sum(1 for c in cats if c in covered)
        if count > best_count:
            best_count = count
            best_type = t
    if best_count == 0:
        return NO_TYPE, 0.0
    return best_type, best_count / len(cats)


def load_taxonomy(path) -> TaxonomyGraph:
    """Read a tab-separated ``parent<TAB>child`` file into a graph."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{lineno}: expected 'parent<TAB>child', got {line!r}")
            edges.append((parts[0], parts[1]))
    return TaxonomyGraph.from_edges(edges)


def load_gamma(path) -> tuple[GammaMapping, tuple[str, ...]]:
    """Read a ``TYPE<TAB>root_category`` file.

    Returns the mapping plus the type names in file order, which fixes the
    label order of the derived type system.
    """
    roots: dict[str, str] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{lineno}: expected 'TYPE<TAB>root_category', got {line!r}")
            t, root = parts
            if t in roots:
                raise DataError(f"{path}:{lineno}: duplicate mapping for type {t!r}")
            roots[t] = root
            order.append(t)
    return GammaMapping(roots), tuple(order)


def load_entity_catalog(path, taxonomy: TaxonomyGraph) -> EntityCatalog:
    """Read a JSON-lines entity catalog, dropping categories missing from the taxonomy.

    Each line is an object ``{"id": str, "categories": [str]}``. Dropped
    category ids are tallied in ``dropped_category_count``.
    """
    import json

    catalog = EntityCatalog()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if "id" not in obj:
                raise DataError(f"{path}:{lineno}: entity object lacks an 'id'")
            kept = []
            for c in obj.get("categories", []):
                if c in taxonomy:
                    kept.append(c)
                else:
                    catalog.dropped_category_count += 1
            catalog.categories[str(obj["id"])] = frozenset(kept)
    return catalog
