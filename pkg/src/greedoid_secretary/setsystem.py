"""Ground sets, set families, rank and the three closure operators.

Subsets are represented as Python ``int`` bitsets: bit ``i`` stands for the
element with index ``i`` of the ground set.  Python integers are unbounded,
so the same representation serves small and large ground sets alike.

Everything exhaustive goes through :class:`BruteForce`, which tabulates a
feasibility predicate over all ``2**n`` subsets and derives rank, the rank
closure ``tau``, the monotone closure ``sigma`` and the convex closure with
vectorised subset/superset transforms.  Rule-backed structures override the
per-set methods of :class:`Structure`; the tables stay available as an
independent reference for them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Iterator

import numpy as np

from .errors import DomainError, SizeLimitError, StructuralError

#: Largest ground set an exhaustive routine will accept.
MAX_BRUTE_FORCE = 20

CLOSURE_KINDS = ("tau", "sigma", "convex")


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << i
    return out


def check_size(n: int, what: str = "exhaustive check") -> None:
    if n > MAX_BRUTE_FORCE:
        raise SizeLimitError(
            f"{what} needs all 2**{n} subsets; refusing ground sets larger than {MAX_BRUTE_FORCE}"
        )


class GroundSet:
    """An ordered collection of distinct element labels."""

    def __init__(self, labels: Iterable[Hashable]):
        self.labels = tuple(labels)
        self._index = {label: i for i, label in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise DomainError("ground set labels must be distinct")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except (KeyError, TypeError):
            raise DomainError(f"{label!r} is not an element of the ground set") from None

    def mask(self, labels: Iterable[Hashable]) -> int:
        return mask_of(self.index(label) for label in labels)

    def subset(self, mask: int) -> frozenset:
        return frozenset(self.labels[i] for i in bits(mask))

    def sorted_subset(self, mask: int) -> list:
        return [self.labels[i] for i in bits(mask)]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"GroundSet({list(self.labels)!r})"


# --------------------------------------------------------------------------
# Exhaustive reference tables
# --------------------------------------------------------------------------


def _subset_max(values: np.ndarray, n: int) -> np.ndarray:
    """``out[A] = max(values[B] for B subset of A)``."""
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        np.maximum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return out


def _superset_and(values: np.ndarray, n: int) -> np.ndarray:
    """``out[A] = AND(values[B] for B superset of A)``."""
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        np.bitwise_and(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])
    return out


def _superset_or(values: np.ndarray, n: int) -> np.ndarray:
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        np.logical_or(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])
    return out


class BruteForce:
    """All-subsets tables for a feasibility predicate on ``n <= 20`` elements."""

    def __init__(self, n: int, feasible: np.ndarray):
        check_size(n)
        feasible = np.asarray(feasible, dtype=bool)
        if feasible.shape != (1 << n,):
            raise ValueError("feasibility table must have 2**n entries")
        self.n = n
        self.full = (1 << n) - 1
        self.feasible = feasible
        self.masks = np.arange(1 << n, dtype=np.int64)

    @classmethod
    def from_predicate(cls, n: int, predicate: Callable[[int], bool]) -> "BruteForce":
        check_size(n)
        table = np.fromiter((predicate(m) for m in range(1 << n)), dtype=bool, count=1 << n)
        return cls(n, table)

    @classmethod
    def from_members(cls, n: int, members: Iterable[int]) -> "BruteForce":
        check_size(n)
        table = np.zeros(1 << n, dtype=bool)
        idx = np.fromiter(members, dtype=np.int64)
        table[idx] = True
        return cls(n, table)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bitwise_count(self.masks).astype(np.int64)

    @cached_property
    def rank(self) -> np.ndarray:
        # Families without the empty set can have subsets with no feasible
        # subset at all; their rank is reported as 0.
        base = np.where(self.feasible, self.sizes, -1)
        return np.maximum(_subset_max(base, self.n), 0)

    def _shift(self, table: np.ndarray, bit: int) -> np.ndarray:
        """``table[A | bit]`` for every ``A``."""
        return table[self.masks | bit]

    @cached_property
    def tau(self) -> np.ndarray:
        rank = self.rank
        out = self.masks.copy()
        for x in range(self.n):
            b = 1 << x
            same = self._shift(rank, b) == rank
            out |= np.where(same, b, 0)
        return out

    @cached_property
    def tau_closed(self) -> np.ndarray:
        return self.tau == self.masks

    @cached_property
    def sigma(self) -> np.ndarray:
        values = np.where(self.tau_closed, self.masks, self.full)
        return _superset_and(values, self.n)

    @cached_property
    def _convex_pair(self) -> tuple[np.ndarray, np.ndarray]:
        complement_feasible = self.feasible[self.full ^ self.masks]
        values = np.where(complement_feasible, self.masks, self.full)
        return _superset_and(values, self.n), _superset_or(complement_feasible, self.n)

    @property
    def convex(self) -> np.ndarray:
        table, defined = self._convex_pair
        if not defined.all():
            first = int(np.argmin(defined))
            raise StructuralError(
                f"no set with feasible complement contains subset mask {first}; "
                "the convex closure is undefined"
            )
        return table

    def convex_of(self, mask: int) -> int:
        table, defined = self._convex_pair
        if not defined[mask]:
            raise StructuralError("no set with feasible complement contains the given subset")
        return int(table[mask])

    def closure(self, kind: str) -> np.ndarray:
        if kind == "tau":
            return self.tau
        if kind == "sigma":
            return self.sigma
        if kind == "convex":
            return self.convex
        raise DomainError(f"unknown closure {kind!r}; expected one of {CLOSURE_KINDS}")

    @cached_property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.feasible)


# --------------------------------------------------------------------------
# Families and structures
# --------------------------------------------------------------------------


class SetFamily:
    """A ground set together with an explicit collection of its subsets."""

    def __init__(self, ground: GroundSet | Iterable[Hashable], members: Iterable[Iterable[Hashable]]):
        self.ground = ground if isinstance(ground, GroundSet) else GroundSet(ground)
        self.members = frozenset(self.ground.mask(m) for m in members)

    @classmethod
    def from_masks(cls, ground: GroundSet, masks: Iterable[int]) -> "SetFamily":
        family = cls(ground, ())
        family.members = frozenset(int(m) for m in masks)
        for m in family.members:
            if m >> ground.n:
                raise DomainError(f"subset mask {m} is not contained in the ground set")
        return family

    @classmethod
    def from_dict(cls, data: dict) -> "SetFamily":
        n = data["n"]
        if not isinstance(n, int) or n < 0:
            raise DomainError("'n' must be a non-negative integer")
        members = data["members"]
        for m in members:
            for i in m:
                if not isinstance(i, int) or not 0 <= i < n:
                    raise DomainError(f"member {m} has index {i!r} outside 0..{n - 1}")
        return cls(range(n), members)

    @classmethod
    def from_json(cls, text: str) -> "SetFamily":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        if self.ground.labels != tuple(range(self.ground.n)):
            members = [[self.ground.index(x) for x in sorted(self.ground.subset(m), key=self.ground.index)]
                       for m in sorted(self.members)]
        else:
            members = [list(bits(m)) for m in sorted(self.members)]
        return {"n": self.ground.n, "members": members}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __contains__(self, subset: Iterable[Hashable]) -> bool:
        return self.ground.mask(subset) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[frozenset]:
        for m in sorted(self.members):
            yield self.ground.subset(m)


class Structure:
    """A set system exposing feasibility, rank and closures on bitset subsets.

    Subclasses override :meth:`is_feasible` and, where a rule is known, the
    rank and closure methods.  ``closure_kind`` names the closure that decides
    dependence in the stopping process.
    """

    kind = "structure"
    closure_kind = "sigma"
    is_matroid = False
    is_antimatroid = False

    def __init__(self, ground: GroundSet):
        self.ground = ground

    # ground-set conveniences
    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def labels(self) -> tuple:
        return self.ground.labels

    @property
    def full(self) -> int:
        return self.ground.full

    def mask(self, labels: Iterable[Hashable]) -> int:
        return self.ground.mask(labels)

    def subset(self, mask: int) -> frozenset:
        return self.ground.subset(mask)

    # feasibility and reference tables
    def is_feasible(self, mask: int) -> bool:
        raise NotImplementedError

    @cached_property
    def tables(self) -> BruteForce:
        """Exhaustive reference tables; raises :class:`SizeLimitError` beyond 20 elements."""
        check_size(self.n, f"tabulating {self.kind}")
        return BruteForce.from_predicate(self.n, self.is_feasible)

    def family(self) -> SetFamily:
        return SetFamily.from_masks(self.ground, (int(m) for m in self.tables.members))

    # rank and closures; generic versions read the reference tables
    def rank(self, mask: int) -> int:
        return int(self.tables.rank[mask])

    def tau(self, mask: int) -> int:
        r = self.rank(mask)
        out = mask
        for x in bits(self.full & ~mask):
            if self.rank(mask | (1 << x)) == r:
                out |= 1 << x
        return out

    def sigma(self, mask: int) -> int:
        return int(self.tables.sigma[mask])

    def convex(self, mask: int) -> int:
        return self.tables.convex_of(mask)

    def closure(self, mask: int, kind: str | None = None) -> int:
        kind = kind or self.closure_kind
        if kind == "tau":
            return self.tau(mask)
        if kind == "sigma":
            return self.sigma(mask)
        if kind == "convex":
            return self.convex(mask)
        raise DomainError(f"unknown closure {kind!r}; expected one of {CLOSURE_KINDS}")

    def closure_table(self, kind: str) -> np.ndarray:
        """The structure's own closure evaluated on every subset."""
        check_size(self.n, "closure table")
        fn = {"tau": self.tau, "sigma": self.sigma, "convex": self.convex}.get(kind)
        if fn is None:
            raise DomainError(f"unknown closure {kind!r}; expected one of {CLOSURE_KINDS}")
        return np.fromiter((fn(m) for m in range(1 << self.n)), dtype=np.int64, count=1 << self.n)

    def tracker(self) -> "ClosureTracker":
        return ClosureTracker(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class ExplicitStructure(Structure):
    """A structure given by an explicit feasible family."""

    kind = "explicit"

    def __init__(self, family: SetFamily, closure_kind: str = "sigma"):
        if closure_kind not in CLOSURE_KINDS:
            raise DomainError(f"unknown closure {closure_kind!r}")
        super().__init__(family.ground)
        self.family_ = family
        self.closure_kind = closure_kind

    def is_feasible(self, mask: int) -> bool:
        return mask in self.family_.members

    @cached_property
    def tables(self) -> BruteForce:
        check_size(self.n, "tabulating an explicit family")
        return BruteForce.from_members(self.n, self.family_.members)

    def tau(self, mask: int) -> int:
        return int(self.tables.tau[mask])

    def closure_table(self, kind: str) -> np.ndarray:
        return self.tables.closure(kind)

    def family(self) -> SetFamily:
        return self.family_


class ClosureTracker:
    """Arrived set of a stream with its rank and closure kept current.

    The generic tracker recomputes the closure after every arrival.
    Structures with a direct rule supply faster trackers with the same
    interface.
    """

    def __init__(self, structure: Structure):
        self.structure = structure
        self.arrived = 0
        self.rank = 0
        self._closed = structure.closure(0)

    def contains(self, element: int) -> bool:
        return bool(self._closed >> element & 1)

    def add(self, element: int) -> None:
        self.arrived |= 1 << element
        self.rank = self.structure.rank(self.arrived)
        self._closed = self.structure.closure(self.arrived)

    def closed_mask(self) -> int:
        return self._closed


# --------------------------------------------------------------------------
# Axiom and closure-property checkers
# --------------------------------------------------------------------------


@dataclass
class AxiomReport:
    """Truth value of each checked axiom, with a counterexample for every failure."""

    flags: dict[str, bool]
    witnesses: dict[str, dict[str, Any]] = field(default_factory=dict)

    def holds(self, *names: str) -> bool:
        names = names or tuple(self.flags)
        return all(self.flags[name] for name in names)

    def to_dict(self) -> dict:
        return {"flags": dict(self.flags), "witnesses": _jsonable(self.witnesses)}


@dataclass
class ClosureReport(AxiomReport):
    """Same shape as :class:`AxiomReport`, for closure properties."""


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted((_jsonable(x) for x in obj), key=repr)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _as_structure(obj: Structure | SetFamily) -> Structure:
    if isinstance(obj, Structure):
        return obj
    if isinstance(obj, SetFamily):
        return ExplicitStructure(obj)
    raise TypeError(f"expected a Structure or SetFamily, got {type(obj).__name__}")


def _first(flags: np.ndarray) -> int | None:
    if not flags.any():
        return None
    return int(np.argmax(flags))


def _first_missing_subset(feasible: np.ndarray, member: int) -> int:
    # submasks of ``member`` in increasing numeric order
    for s in range(member + 1):
        if s & ~member == 0 and not feasible[s]:
            return s
    raise AssertionError("member has no missing subset")  # pragma: no cover


def _empty_axiom(tab: BruteForce, ground: GroundSet, name: str, report: AxiomReport) -> None:
    ok = bool(tab.feasible[0])
    report.flags[name] = ok
    if not ok:
        report.witnesses[name] = {"missing": frozenset()}


def _exchange_axiom(tab: BruteForce, ground: GroundSet, name: str, report: AxiomReport) -> None:
    # Augmenting elements of every set: x outside A with A + x feasible.
    aug = np.zeros_like(tab.masks)
    for x in range(tab.n):
        b = 1 << x
        aug |= np.where(((tab.masks & b) == 0) & tab._shift(tab.feasible, b), b, 0)
    # A larger member avoiding every augmenting element is a violation.
    blocked = tab.rank[tab.full & ~aug] > tab.sizes
    bad = tab.feasible & blocked
    first = _first(bad)
    report.flags[name] = first is None
    if first is not None:
        avoid = tab.full & ~int(aug[first])
        size = int(tab.sizes[first])
        larger = next(
            int(m) for m in tab.members if int(m) & ~avoid == 0 and int(tab.sizes[m]) > size
        )
        report.witnesses[name] = {"smaller": ground.subset(first), "larger": ground.subset(larger)}


def _table_for(obj: Structure | SetFamily) -> tuple[BruteForce, GroundSet]:
    structure = _as_structure(obj)
    return structure.tables, structure.ground


def check_matroid_axioms(obj: Structure | SetFamily) -> AxiomReport:
    """Check non-emptiness, heredity and exchange of a feasible family."""
    tab, ground = _table_for(obj)
    report = AxiomReport(flags={})
    _empty_axiom(tab, ground, "i1", report)

    removable_bad = np.zeros(1 << tab.n, dtype=bool)
    for x in range(tab.n):
        b = 1 << x
        has = (tab.masks & b) != 0
        removable_bad |= has & ~tab.feasible[tab.masks ^ b]
    first = _first(tab.feasible & removable_bad)
    report.flags["i2"] = first is None
    if first is not None:
        missing = _first_missing_subset(tab.feasible, first)
        report.witnesses["i2"] = {"subset": ground.subset(missing), "member": ground.subset(first)}

    _exchange_axiom(tab, ground, "i3", report)
    return report


def check_greedoid_axioms(obj: Structure | SetFamily) -> AxiomReport:
    """Check non-emptiness, augmentation and accessibility of a feasible family."""
    tab, ground = _table_for(obj)
    report = AxiomReport(flags={})
    _empty_axiom(tab, ground, "f1", report)
    _exchange_axiom(tab, ground, "f2", report)

    accessible = np.zeros(1 << tab.n, dtype=bool)
    for x in range(tab.n):
        b = 1 << x
        accessible |= ((tab.masks & b) != 0) & tab.feasible[tab.masks ^ b]
    first = _first(tab.feasible & (tab.masks != 0) & ~accessible)
    report.flags["a1"] = first is None
    if first is not None:
        report.witnesses["a1"] = {"member": ground.subset(first)}
    return report


def check_closure_properties(structure: Structure, closure: str) -> ClosureReport:
    """Exhaustively test (s1)-(s3), exchange and antiexchange of a closure.

    Witnesses are the first violation in the order (A, e, f) with subsets
    compared as bitmasks.  Monotonicity is tested on single-element
    extensions, which is equivalent to the full statement.
    """
    check_size(structure.n, "closure property check")
    cl = structure.closure_table(closure)
    ground = structure.ground
    n = structure.n
    masks = np.arange(1 << n, dtype=np.int64)
    report = ClosureReport(flags={})

    first = _first((cl & masks) != masks)
    report.flags["s1"] = first is None
    if first is not None:
        report.witnesses["s1"] = {"A": ground.subset(first)}

    candidates = []
    for x in range(n):
        b = 1 << x
        bad = ((masks & b) == 0) & ((cl & ~cl[masks | b]) != 0)
        i = _first(bad)
        if i is not None:
            candidates.append((i, x))
    report.flags["s2"] = not candidates
    if candidates:
        a, x = min(candidates)
        report.witnesses["s2"] = {"A": ground.subset(a), "B": ground.subset(a | 1 << x)}

    first = _first(cl[cl] != cl)
    report.flags["s3"] = first is None
    if first is not None:
        report.witnesses["s3"] = {"A": ground.subset(first)}

    for name in ("ex", "aex"):
        candidates = []
        for e in range(n):
            be = 1 << e
            with_e = cl[masks | be]
            for f in range(n):
                if name == "aex" and f == e:
                    continue
                bf = 1 << f
                premise = ((cl & bf) == 0) & ((with_e & bf) != 0)
                e_in = (cl[masks | bf] & be) != 0
                bad = premise & (~e_in if name == "ex" else e_in)
                i = _first(bad)
                if i is not None:
                    candidates.append((i, e, f))
        report.flags[name] = not candidates
        if candidates:
            a, e, f = min(candidates)
            report.witnesses[name] = {"A": ground.subset(a), "e": ground.labels[e], "f": ground.labels[f]}
    return report


# --------------------------------------------------------------------------
# Label-level operations
# --------------------------------------------------------------------------


def rank(structure: Structure, subset: Iterable[Hashable]) -> int:
    return structure.rank(structure.mask(subset))


def tau_closure(structure: Structure, subset: Iterable[Hashable]) -> frozenset:
    """All elements whose addition leaves the rank unchanged."""
    return structure.subset(structure.tau(structure.mask(subset)))


def sigma_monotone_closure(structure: Structure, subset: Iterable[Hashable]) -> frozenset:
    """Intersection of all tau-closed supersets."""
    return structure.subset(structure.sigma(structure.mask(subset)))


def convex_closure(structure: Structure, subset: Iterable[Hashable]) -> frozenset:
    """Intersection of all supersets whose complement is feasible."""
    return structure.subset(structure.convex(structure.mask(subset)))


def is_feasible(structure: Structure, subset: Iterable[Hashable]) -> bool:
    return structure.is_feasible(structure.mask(subset))


def bases(structure: Structure) -> list[frozenset]:
    """Inclusion-maximal feasible sets, which must share one cardinality."""
    tab = structure.tables
    extendable = np.zeros(1 << tab.n, dtype=bool)
    above = _superset_or(tab.feasible, tab.n)
    for x in range(tab.n):
        b = 1 << x
        extendable |= ((tab.masks & b) == 0) & above[tab.masks | b]
    found = np.flatnonzero(tab.feasible & ~extendable)
    sizes = {int(tab.sizes[m]) for m in found}
    if len(sizes) > 1:
        raise StructuralError(f"maximal feasible sets have different sizes {sorted(sizes)}")
    return [structure.subset(int(m)) for m in found]


def check_lemma2_nested_closures(structure: Structure, sequence: Iterable[Hashable]) -> bool:
    """Whether the convex closures of the prefixes of ``sequence`` are nested."""
    if not structure.is_antimatroid:
        raise StructuralError(f"{structure.kind} is not an antimatroid")
    idx = [structure.ground.index(x) for x in sequence]
    if len(set(idx)) != len(idx):
        raise DomainError("sequence elements must be distinct")
    closures = []
    prefix = 0
    for i in idx:
        prefix |= 1 << i
        closures.append(structure.convex(prefix))
    return all(
        closures[i] & ~closures[j] == 0
        for i in range(len(closures))
        for j in range(i + 1, len(closures))
    )
