"""Concrete matroids, greedoids and antimatroids with direct rank/closure rules."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .errors import DomainError, StructuralError
from .setsystem import ExplicitStructure, GroundSet, SetFamily, Structure, bits

__all__ = [
    "UniformMatroid",
    "LinearHierarchy",
    "RootedTree",
    "RootedTreeAntimatroid",
    "CompleteBinaryTree",
    "RootedDag",
    "RootedDagGreedoid",
    "GraphicKn",
    "uniform_matroid",
    "linear_hierarchy",
    "rooted_tree_antimatroid",
    "spanning_roots",
    "rooted_dag_greedoid",
    "complete_binary_tree",
    "is_linear_sequence",
    "graphic_matroid_kn",
    "fixture_tree",
    "fixture_dag",
    "structure_from_dict",
]


# --------------------------------------------------------------------------
# Uniform matroid
# --------------------------------------------------------------------------


class UniformMatroid(Structure):
    """All subsets of ``[n]`` with at most ``k`` elements."""

    kind = "uniform"
    closure_kind = "tau"
    is_matroid = True

    def __init__(self, k: int, n: int):
        if not 0 <= k <= n:
            raise DomainError(f"uniform matroid needs 0 <= k <= n, got k={k}, n={n}")
        super().__init__(GroundSet(range(1, n + 1)))
        self.k = k

    def is_feasible(self, mask: int) -> bool:
        return mask.bit_count() <= self.k

    def rank(self, mask: int) -> int:
        return min(mask.bit_count(), self.k)

    def tau(self, mask: int) -> int:
        return mask if mask.bit_count() < self.k else self.full

    sigma = tau

    def tracker(self) -> "UniformTracker":
        return UniformTracker(self)

    def __repr__(self) -> str:
        return f"UniformMatroid(k={self.k}, n={self.n})"


class UniformTracker:
    def __init__(self, structure: UniformMatroid):
        self.k = structure.k
        self.full = structure.full
        self.arrived = 0
        self.count = 0
        self.rank = 0

    def contains(self, element: int) -> bool:
        return self.count >= self.k or bool(self.arrived >> element & 1)

    def add(self, element: int) -> None:
        self.arrived |= 1 << element
        self.count += 1
        self.rank = min(self.count, self.k)

    def closed_mask(self) -> int:
        return self.full if self.count >= self.k else self.arrived


# --------------------------------------------------------------------------
# Linear hierarchy
# --------------------------------------------------------------------------


class LinearHierarchy(Structure):
    """Elements ``1..n`` ranked by label; feasible sets are the top segments.

    Closed sets under the convex closure are the initial segments ``[k]``:
    once an element is rejected, everything ranked below it is dependent.
    """

    kind = "linear-hierarchy"
    closure_kind = "convex"
    is_antimatroid = True

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("linear hierarchy needs n >= 1")
        super().__init__(GroundSet(range(1, n + 1)))

    def is_feasible(self, mask: int) -> bool:
        rest = self.full & ~mask
        return rest & (rest + 1) == 0

    def rank(self, mask: int) -> int:
        rest = self.full & ~mask
        return self.n - rest.bit_length()

    def convex(self, mask: int) -> int:
        return (1 << mask.bit_length()) - 1

    def tracker(self) -> "LinearTracker":
        return LinearTracker(self)


class LinearTracker:
    def __init__(self, structure: LinearHierarchy):
        self.structure = structure
        self.arrived = 0
        self.top = 0  # bit length of the arrived set
        self.rank = 0

    def contains(self, element: int) -> bool:
        return element < self.top

    def add(self, element: int) -> None:
        self.arrived |= 1 << element
        if element >= self.top:
            self.top = element + 1
        self.rank = self.structure.rank(self.arrived)

    def closed_mask(self) -> int:
        return (1 << self.top) - 1


# --------------------------------------------------------------------------
# Rooted trees
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootedTree:
    """A tree given by its root and a parent map."""

    root: Hashable
    parent: dict

    @classmethod
    def from_edges(cls, root: Hashable, edges: Iterable[Sequence[Hashable]]) -> "RootedTree":
        parent: dict = {}
        for edge in edges:
            if len(edge) != 2:
                raise DomainError(f"edge {edge!r} must be a [parent, child] pair")
            p, c = edge
            if c in parent:
                raise DomainError(f"vertex {c!r} has two parents")
            if c == root:
                raise DomainError("the root cannot have a parent")
            parent[c] = p
        tree = cls(root, parent)
        tree.order()  # validates
        return tree

    @classmethod
    def from_dict(cls, data: dict) -> "RootedTree":
        try:
            return cls.from_edges(data["root"], data["edges"])
        except KeyError as exc:
            raise DomainError(f"rooted tree description lacks {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {"root": self.root, "edges": [[p, c] for c, p in self.parent.items()]}

    def children(self) -> dict:
        out: dict = {self.root: []}
        for c in self.parent:
            out.setdefault(c, [])
        for c, p in self.parent.items():
            if p not in out:
                raise DomainError(f"parent {p!r} of {c!r} is not a vertex reachable from the root")
            out[p].append(c)
        return out

    def order(self) -> list:
        """Vertices in breadth-first order from the root."""
        children = self.children()
        seen = [self.root]
        queue = deque([self.root])
        visited = {self.root}
        while queue:
            v = queue.popleft()
            for c in children[v]:
                if c in visited:  # pragma: no cover - single parents make this impossible
                    raise DomainError("tree contains a cycle")
                visited.add(c)
                seen.append(c)
                queue.append(c)
        if len(visited) != len(children):
            missing = sorted(set(children) - visited, key=repr)
            raise DomainError(f"vertices {missing} are not reachable from the root")
        return seen


class RootedTreeAntimatroid(Structure):
    """Vertex sets of subtrees containing the root.

    The convex closure of ``A`` is the union of the subtrees hanging from the
    vertices of ``A``.
    """

    kind = "rooted-tree"
    closure_kind = "convex"
    is_antimatroid = True

    def __init__(self, tree: RootedTree):
        order = tree.order()
        super().__init__(GroundSet(order))
        self.tree = tree
        index = {v: i for i, v in enumerate(order)}
        self.parent_index = [-1] + [index[tree.parent[v]] for v in order[1:]]
        kids: list[list[int]] = [[] for _ in order]
        for i, p in enumerate(self.parent_index):
            if p >= 0:
                kids[p].append(i)
        self.children_index = kids
        heights = [0] * len(order)
        for i in range(1, len(order)):
            heights[i] = heights[self.parent_index[i]] + 1
        self.heights = heights

    @cached_property
    def descendants(self) -> list[int]:
        """Subtree mask of every vertex (the vertex included)."""
        out = [1 << i for i in range(self.n)]
        for i in range(self.n - 1, 0, -1):  # BFS order: children after parents
            out[self.parent_index[i]] |= out[i]
        return out

    @property
    def height(self) -> int:
        return max(self.heights)

    def height_of(self, label: Hashable) -> int:
        return self.heights[self.ground.index(label)]

    def is_feasible(self, mask: int) -> bool:
        if mask == 0:
            return True
        if not mask & 1:
            return False
        parent = self.parent_index
        return all(mask >> parent[i] & 1 for i in bits(mask & ~1))

    def rank(self, mask: int) -> int:
        if not mask & 1:
            return 0
        count = 0
        stack = [0]
        kids = self.children_index
        while stack:
            v = stack.pop()
            count += 1
            stack.extend(c for c in kids[v] if mask >> c & 1)
        return count

    def convex(self, mask: int) -> int:
        out = 0
        desc = self.descendants
        for i in bits(mask):
            out |= desc[i]
        return out

    def spanning_roots(self, mask: int) -> int:
        if self.convex(mask) != mask:
            raise DomainError("spanning roots are defined for closed sets only")
        parent = self.parent_index
        out = 0
        for i in bits(mask):
            p = parent[i]
            if p < 0 or not mask >> p & 1:
                out |= 1 << i
        return out

    def tracker(self) -> "TreeTracker":
        return TreeTracker(self)


class TreeTracker:
    def __init__(self, structure: RootedTreeAntimatroid):
        self.structure = structure
        self.parent = structure.parent_index
        self.kids = structure.children_index
        self.arrived = 0
        self.rooted = 0
        self.rank = 0

    def contains(self, element: int) -> bool:
        arrived = self.arrived
        parent = self.parent
        v = element
        while v >= 0:
            if arrived >> v & 1:
                return True
            v = parent[v]
        return False

    def add(self, element: int) -> None:
        self.arrived |= 1 << element
        p = self.parent[element]
        if p < 0 or self.rooted >> p & 1:
            stack = [element]
            while stack:
                v = stack.pop()
                self.rooted |= 1 << v
                self.rank += 1
                stack.extend(c for c in self.kids[v] if self.arrived >> c & 1)

    def closed_mask(self) -> int:
        return self.structure.convex(self.arrived)


class CompleteBinaryTree(RootedTreeAntimatroid):
    """Complete full binary tree of height ``h``, vertices ``1..2**(h+1)-1`` in level order."""

    kind = "binary-tree"

    def __init__(self, h: int):
        if h < 0:
            raise DomainError("binary tree height must be >= 0")
        n = 2 ** (h + 1) - 1
        tree = RootedTree.from_edges(1, ([(i + 1) // 2, i + 1] for i in range(1, n)))
        super().__init__(tree)
        self.h = h

    @staticmethod
    def level(index: int) -> int:
        """Height of the vertex with 0-based level-order index ``index``."""
        return (index + 1).bit_length() - 1

    @property
    def leaves(self) -> int:
        return sum(1 for kids in self.children_index if not kids)

    def __repr__(self) -> str:
        return f"CompleteBinaryTree(h={self.h})"


# --------------------------------------------------------------------------
# Rooted acyclic digraphs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootedDag:
    root: Hashable
    arcs: tuple  # (tail, head, label) triples

    @classmethod
    def from_arcs(cls, root: Hashable, arcs: Iterable[Sequence[Hashable]],
                  labels: Iterable[Hashable] | None = None) -> "RootedDag":
        arcs = [tuple(a) for a in arcs]
        for a in arcs:
            if len(a) != 2:
                raise DomainError(f"arc {a!r} must be a [tail, head] pair")
        labels = list(labels) if labels is not None else list(range(len(arcs)))
        if len(labels) != len(arcs):
            raise DomainError("arc_labels must have one label per arc")
        dag = cls(root, tuple((t, h, lab) for (t, h), lab in zip(arcs, labels)))
        dag.topological_order()
        return dag

    @classmethod
    def from_dict(cls, data: dict) -> "RootedDag":
        try:
            return cls.from_arcs(data["root"], data["arcs"], data.get("arc_labels"))
        except KeyError as exc:
            raise DomainError(f"rooted DAG description lacks {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "arcs": [[t, h] for t, h, _ in self.arcs],
            "arc_labels": [lab for _, _, lab in self.arcs],
        }

    def vertices(self) -> set:
        out = {self.root}
        for t, h, _ in self.arcs:
            out.update((t, h))
        return out

    def topological_order(self) -> list:
        sorter = TopologicalSorter({v: set() for v in self.vertices()})
        for t, h, _ in self.arcs:
            sorter.add(h, t)
        try:
            order = list(sorter.static_order())
        except CycleError as exc:
            raise DomainError(f"digraph has a cycle through {exc.args[1]}") from None
        reached = {self.root}
        for v in order:
            for t, h, _ in self.arcs:
                if t == v and t in reached:
                    reached.add(h)
        unreachable = self.vertices() - reached
        if unreachable:
            raise DomainError(f"vertices {sorted(unreachable, key=repr)} are not reachable from the root")
        return order

    def indegrees(self) -> dict:
        deg = {v: 0 for v in self.vertices()}
        for _, h, _ in self.arcs:
            deg[h] += 1
        return deg

    def line_tree(self) -> RootedTree:
        """The line graph as a rooted tree, when every arc has its own head.

        Requires in-degree 1 at every non-root vertex and a single arc
        leaving the root; the arcs then form a tree rooted at that arc.
        """
        deg = self.indegrees()
        if any(d != 1 for v, d in deg.items() if v != self.root):
            raise StructuralError("line graph is a tree only when every non-root vertex has in-degree 1")
        from_root = [lab for t, _, lab in self.arcs if t == self.root]
        if len(from_root) != 1:
            raise StructuralError("line graph is a single tree only when one arc leaves the root")
        entering = {h: lab for _, h, lab in self.arcs}
        edges = [[entering[t], lab] for t, _, lab in self.arcs if t != self.root]
        return RootedTree.from_edges(from_root[0], edges)


class RootedDagGreedoid(Structure):
    """Arc sets whose every arc is reachable from the root through the set itself."""

    kind = "rooted-dag"
    closure_kind = "convex"

    def __init__(self, dag: RootedDag):
        order = dag.topological_order()
        position = {v: i for i, v in enumerate(order)}
        super().__init__(GroundSet(lab for _, _, lab in dag.arcs))
        self.dag = dag
        # arc indices sorted so that tails appear in topological order
        self._by_tail = sorted(range(len(dag.arcs)), key=lambda i: position[dag.arcs[i][0]])

    def reached(self, mask: int) -> set:
        reached = {self.dag.root}
        arcs = self.dag.arcs
        for i in self._by_tail:
            if mask >> i & 1 and arcs[i][0] in reached:
                reached.add(arcs[i][1])
        return reached

    def is_feasible(self, mask: int) -> bool:
        reached = self.reached(mask)
        arcs = self.dag.arcs
        return all(arcs[i][0] in reached for i in bits(mask))


# --------------------------------------------------------------------------
# Graphic matroid of the complete graph
# --------------------------------------------------------------------------


def _colex_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based endpoints ``(i, j)``, ``i < j``, of every edge in colex order."""
    j = np.repeat(np.arange(n), np.arange(n))
    starts = j * (j - 1) // 2
    i = np.arange(len(j)) - starts
    return i, j


def edge_endpoints(index: np.ndarray | int) -> tuple:
    """Decode colex edge indices into 0-based endpoints ``(i, j)``."""
    idx = np.asarray(index, dtype=np.int64)
    j = ((1 + np.sqrt(1 + 8 * idx.astype(np.float64))) // 2).astype(np.int64)
    j = np.where(j * (j - 1) // 2 > idx, j - 1, j)
    j = np.where((j + 1) * j // 2 <= idx, j + 1, j)
    i = idx - j * (j - 1) // 2
    return i, j


class GraphicKn(Structure):
    """Forests of the complete graph on vertices ``1..n``; edges are ``(i, j)``, ``i < j``."""

    kind = "graphic-kn"
    closure_kind = "tau"
    is_matroid = True

    def __init__(self, n: int):
        if n < 2:
            raise DomainError("K_n needs n >= 2")
        u, v = _colex_pairs(n)
        super().__init__(GroundSet((int(a) + 1, int(b) + 1) for a, b in zip(u, v)))
        self.vertices = n
        self.tail = u.tolist()
        self.head = v.tolist()

    @staticmethod
    def edge_index(i: int, j: int) -> int:
        """Colex index of the edge between 1-based vertices ``i`` and ``j``."""
        if i == j:
            raise DomainError("K_n has no loops")
        a, b = sorted((i, j))
        return (b - 1) * (b - 2) // 2 + (a - 1)

    def _components(self, mask: int) -> DisjointSet:
        ds = DisjointSet(range(self.vertices))
        for e in bits(mask):
            ds.merge(self.tail[e], self.head[e])
        return ds

    def is_feasible(self, mask: int) -> bool:
        ds = DisjointSet(range(self.vertices))
        for e in bits(mask):
            if not ds.merge(self.tail[e], self.head[e]):
                return False
        return True

    def rank(self, mask: int) -> int:
        return self.vertices - self._components(mask).n_subsets

    def tau(self, mask: int) -> int:
        ds = self._components(mask)
        out = 0
        for e in range(self.n):
            if ds.connected(self.tail[e], self.head[e]):
                out |= 1 << e
        return out

    sigma = tau

    def tracker(self) -> "GraphicTracker":
        return GraphicTracker(self)

    def __repr__(self) -> str:
        return f"GraphicKn(n={self.vertices})"


class GraphicTracker:
    def __init__(self, structure: GraphicKn):
        self.structure = structure
        self.tail = structure.tail
        self.head = structure.head
        self.ds = DisjointSet(range(structure.vertices))
        self.arrived = 0
        self.rank = 0

    def contains(self, element: int) -> bool:
        return self.ds.connected(self.tail[element], self.head[element])

    def add(self, element: int) -> None:
        self.arrived |= 1 << element
        if self.ds.merge(self.tail[element], self.head[element]):
            self.rank += 1

    def closed_mask(self) -> int:
        return self.structure.tau(self.arrived)


# --------------------------------------------------------------------------
# Label-level constructors and helpers
# --------------------------------------------------------------------------


def uniform_matroid(k: int, n: int) -> UniformMatroid:
    return UniformMatroid(k, n)


def linear_hierarchy(n: int) -> LinearHierarchy:
    return LinearHierarchy(n)


def rooted_tree_antimatroid(tree: RootedTree) -> RootedTreeAntimatroid:
    return RootedTreeAntimatroid(tree)


def complete_binary_tree(h: int) -> CompleteBinaryTree:
    return CompleteBinaryTree(h)


def rooted_dag_greedoid(dag: RootedDag) -> RootedDagGreedoid:
    return RootedDagGreedoid(dag)


def graphic_matroid_kn(n: int) -> GraphicKn:
    return GraphicKn(n)


def spanning_roots(structure: RootedTreeAntimatroid, closed: Iterable[Hashable]) -> frozenset:
    """Roots of the maximal subtrees making up a closed set."""
    if not isinstance(structure, RootedTreeAntimatroid):
        raise StructuralError("spanning roots need a rooted-tree antimatroid")
    return structure.subset(structure.spanning_roots(structure.mask(closed)))


def is_linear_sequence(structure: RootedTreeAntimatroid, vertices: Sequence[Hashable]) -> bool:
    """True when each vertex sits exactly one level below its predecessor."""
    heights = [structure.height_of(v) for v in vertices]
    return all(b == a + 1 for a, b in zip(heights, heights[1:]))


def fixture_tree() -> RootedTree:
    """Eleven-vertex hierarchy used throughout the tests and bundled data."""
    return RootedTree.from_edges(
        "r",
        [("r", "a"), ("r", "b"), ("r", "c"), ("a", "d"), ("a", "e"),
         ("c", "f"), ("f", "g"), ("f", "h"), ("g", "i"), ("h", "j")],
    )


def fixture_dag() -> RootedDag:
    """Four-vertex rooted DAG with six labelled arcs."""
    return RootedDag.from_arcs(
        "r",
        [("r", "u"), ("r", "v"), ("u", "v"), ("v", "w"), ("u", "x"), ("w", "x")],
        labels="abcdef",
    )


def structure_from_dict(data: dict) -> Structure:
    """Build a structure from its JSON description.

    A bare ``{"n": ..., "members": [...]}`` is an explicit family; otherwise
    ``"type"`` selects one of the rule-backed structures.
    """
    if not isinstance(data, dict):
        raise DomainError("structure description must be a JSON object")
    kind = data.get("type", "family" if "members" in data else None)
    try:
        if kind == "family":
            return ExplicitStructure(SetFamily.from_dict(data), data.get("closure", "sigma"))
        if kind == "uniform":
            return UniformMatroid(int(data["k"]), int(data["n"]))
        if kind == "linear-hierarchy":
            return LinearHierarchy(int(data["n"]))
        if kind == "rooted-tree":
            return RootedTreeAntimatroid(RootedTree.from_dict(data))
        if kind == "binary-tree":
            return CompleteBinaryTree(int(data["h"]))
        if kind == "rooted-dag":
            return RootedDagGreedoid(RootedDag.from_dict(data))
        if kind == "graphic-kn":
            return GraphicKn(int(data["n"]))
    except KeyError as exc:
        raise DomainError(f"{kind} description lacks {exc.args[0]!r}") from None
    raise DomainError(f"unknown structure type {kind!r}")


def closed_sets(structure: Structure) -> list[int]:
    """All masks fixed by the structure's designated closure (exhaustive)."""
    table = structure.closure_table(structure.closure_kind)
    return [m for m in range(1 << structure.n) if int(table[m]) == m]


def binary_tree_sizes(h: int) -> tuple[int, int]:
    """``(vertices, leaves)`` of the complete full binary tree of height ``h``."""
    return 2 ** (h + 1) - 1, 2 ** h

