"""Ambient rooted trees, their boundary, and exact clopen-set arithmetic.

The ambient tree is the unrolling of a finite *type graph*: a finite set of
vertex types, each with a nonempty ordered list of child types.  Every vertex
of the unrolled tree is addressed by its sequence of child indices from the
root, so the tree itself is never materialised.  Because every type has at
least one child the tree has no leaves and its boundary (the space of infinite
directed paths from the root) is a compact ultrametric space under
d(x, y) = 2^(-common prefix length).

Three exact value types live here:

- ``BoundaryPoint``: an eventually periodic end, stored as (prefix, cycle) and
  normalised so that equal ends have identical representations.
- ``ClopenSet``: a finite union of balls, stored as a trie in a canonical
  normal form (no ball is redundant, full sibling sets are merged), so that
  two clopen sets denote the same subset of the boundary iff their
  representations are equal.
- addresses, which are plain tuples of child indices.

All values are immutable and hashable; operations never mutate shared state.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

# Clopen-set tries recurse along vertex depth, which grows with the depth of
# the tree pairs involved (large powers of one element reach a few thousand).
sys.setrecursionlimit(max(sys.getrecursionlimit(), 50_000))

Address = tuple  # tuple[int, ...]; () is the root

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_ARITY = len(_DIGITS)  # limit imposed by the digit-string address format


class FormatError(ValueError):
    """Malformed textual input (type graph, address, point, element...)."""


# ---------------------------------------------------------------------------
# Type graphs


class TypeGraph:
    """Finite description of a locally finite rooted tree with no leaves.

    ``children`` maps each type name to the ordered, nonempty tuple of its
    child types; ``root_type`` is the type of the root vertex.  The linear
    order on the children of every vertex is the listed order.
    """

    __slots__ = ("children", "root_type", "types", "_key", "_ordered_color",
                 "_unordered_color", "_singleton_types", "_hash")

    def __init__(self, children: Mapping[str, Sequence[str]], root_type: str):
        kids = {str(t): tuple(str(c) for c in cs) for t, cs in children.items()}
        if root_type not in kids:
            raise FormatError(f"root type {root_type!r} is not declared")
        for t, cs in kids.items():
            if not cs:
                raise FormatError(f"type {t!r} has an empty children sequence "
                                  "(the tree must have no leaves)")
            if len(cs) > MAX_ARITY:
                raise FormatError(f"type {t!r} has arity {len(cs)} > {MAX_ARITY}, "
                                  "unsupported by the address format")
            for c in cs:
                if c not in kids:
                    raise FormatError(f"type {t!r} names unknown child type {c!r}")
        self.children = kids
        self.root_type = root_type
        self.types = tuple(sorted(kids))
        self._key = (tuple((t, kids[t]) for t in self.types), root_type)
        self._hash = hash(self._key)
        self._ordered_color = self._refine(ordered=True)
        self._unordered_color = self._refine(ordered=False)
        self._singleton_types = self._find_singletons()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeGraph) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"TypeGraph({self.children!r}, root={self.root_type!r})"

    def arity(self, t: str) -> int:
        return len(self.children[t])

    def type_at(self, address: Address) -> str:
        """Type of the vertex reached from the root along ``address``."""
        t = self.root_type
        for i in address:
            cs = self.children[t]
            if not 0 <= i < len(cs):
                raise ValueError(f"index {i} out of range at type {t!r}")
            t = cs[i]
        return t

    def is_valid_address(self, address: Address) -> bool:
        t = self.root_type
        for i in address:
            cs = self.children[t]
            if not 0 <= i < len(cs):
                return False
            t = cs[i]
        return True

    def _refine(self, ordered: bool) -> dict:
        # Partition refinement: two types get the same color iff their
        # unrollings are isomorphic as rooted trees (respecting child order
        # when ordered=True, allowing any child matching otherwise).
        color = {t: 0 for t in self.types}
        while True:
            sigs = {}
            for t in self.types:
                kid_colors = tuple(color[c] for c in self.children[t])
                if not ordered:
                    kid_colors = tuple(sorted(kid_colors))
                sigs[t] = (color[t], kid_colors)
            remap: dict = {}
            new = {}
            for t in self.types:
                new[t] = remap.setdefault(sigs[t], len(remap))
            if new == color:
                return color
            color = new

    def _find_singletons(self) -> frozenset:
        # A type is a "singleton" type when every type reachable from it has
        # arity 1, i.e. the subtree below it is a single ray and the ball at
        # such a vertex is one boundary point.
        cand = {t for t in self.types if self.arity(t) == 1}
        changed = True
        while changed:
            changed = False
            for t in list(cand):
                if any(c not in cand for c in self.children[t]):
                    cand.discard(t)
                    changed = True
        return frozenset(cand)

    def subtree_order_isomorphic(self, s: str, t: str) -> bool:
        """True iff the unrollings below types s and t are isomorphic by an
        isomorphism matching the i-th child with the i-th child."""
        return self._ordered_color[s] == self._ordered_color[t]

    def is_singleton_type(self, t: str) -> bool:
        return t in self._singleton_types

    def to_json(self) -> dict:
        return {"types": {t: list(self.children[t]) for t in self.types},
                "root": self.root_type}


def load_type_graph(text: str) -> TypeGraph:
    """Parse a type graph from its JSON description.

    The format is ``{"types": {name: [child, ...], ...}, "root": name}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"type graph is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or "types" not in doc or "root" not in doc:
        raise FormatError('type graph must be {"types": {...}, "root": ...}')
    types = doc["types"]
    if not isinstance(types, dict) or not types:
        raise FormatError('"types" must be a nonempty mapping')
    for t, cs in types.items():
        if not isinstance(cs, list):
            raise FormatError(f'children of type {t!r} must be an array')
    return TypeGraph(types, doc["root"])


def subtree_isomorphic(tg: TypeGraph, s: str, t: str) -> bool:
    """True iff the trees unrolled below types s and t are isomorphic as
    rooted trees, children matched by an arbitrary bijection."""
    if s not in tg.children or t not in tg.children:
        raise ValueError(f"undeclared type: {s!r} or {t!r}")
    return tg._unordered_color[s] == tg._unordered_color[t]


# ---------------------------------------------------------------------------
# Addresses


def address_str(address: Address) -> str:
    return "".join(_DIGITS[i] for i in address)


def parse_address(text: str) -> Address:
    text = text.strip()
    out = []
    for ch in text:
        if ch not in _DIGITS:
            raise FormatError(f"bad address digit {ch!r} in {text!r}")
        out.append(_DIGITS.index(ch))
    return tuple(out)


def is_prefix(a: Address, b: Address) -> bool:
    """True iff vertex ``a`` lies on the path from the root to ``b``."""
    return len(a) <= len(b) and b[:len(a)] == a


# ---------------------------------------------------------------------------
# Boundary points


@dataclass(frozen=True)
class BoundaryPoint:
    """An eventually periodic end, in canonical (prefix, cycle) form.

    Use :func:`boundary_point` to construct one; the constructor assumes its
    arguments are already canonical.  Canonical means: following the cycle
    from the vertex at the end of the prefix returns to a vertex of the same
    type, the cycle is not a proper power (types included), and the prefix is
    as short as possible.  Two points are equal as ends iff their canonical
    forms are identical.
    """

    tg: TypeGraph
    prefix: Address
    cycle: Address

    def index_at(self, n: int) -> int:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def indices(self) -> Iterator[int]:
        yield from self.prefix
        while True:
            yield from self.cycle

    def address_prefix(self, n: int) -> Address:
        """The address of the depth-n vertex this end passes through."""
        return tuple(self.index_at(k) for k in range(n))

    def drop(self, n: int) -> tuple[Address, Address]:
        """Raw (prefix, cycle) data of the end seen from depth n."""
        if n <= len(self.prefix):
            return self.prefix[n:], self.cycle
        k = (n - len(self.prefix)) % len(self.cycle)
        return (), self.cycle[k:] + self.cycle[:k]

    def __str__(self) -> str:
        return f"{address_str(self.prefix)}({address_str(self.cycle)})^inf"

    def sort_key(self) -> tuple:
        return (self.prefix, self.cycle)


def boundary_point(tg: TypeGraph, prefix: Sequence[int], cycle: Sequence[int]) -> BoundaryPoint:
    """Build the end prefixid(cycle)^inf in canonical form.

    Raises ValueError if the infinite path is not valid in ``tg``.
    """
    prefix = tuple(prefix)
    cycle = tuple(cycle)
    if not cycle:
        raise ValueError("cycle must be nonempty")

    # Validate the prefix and record the type at its end.
    t = tg.root_type
    for i in prefix:
        cs = tg.children[t]
        if not 0 <= i < len(cs):
            raise ValueError(f"invalid index {i} at type {t!r}")
        t = cs[i]

    # Walk whole copies of the cycle until the entry type repeats; this both
    # validates the path and makes the representation type consistent.
    start_types = {t: 0}
    types_seq = [t]
    cur = t
    while True:
        for i in cycle:
            cs = tg.children[cur]
            if not 0 <= i < len(cs):
                raise ValueError(f"invalid index {i} at type {cur!r}")
            cur = cs[i]
        if cur in start_types:
            j = start_types[cur]
            k = len(types_seq)
            break
        start_types[cur] = len(types_seq)
        types_seq.append(cur)
    prefix = prefix + cycle * j
    cycle = cycle * (k - j)

    # Reduce the cycle to a primitive block, comparing (type, index) pairs so
    # the block still returns to its entry type.
    t0 = tg.type_at(prefix)
    pair_cycle = []
    cur = t0
    for i in cycle:
        pair_cycle.append((cur, i))
        cur = tg.children[cur][i]
    m = len(cycle)
    for d in range(1, m + 1):
        if m % d:
            continue
        if pair_cycle[:d] * (m // d) == pair_cycle:
            cycle = cycle[:d]
            break

    # Shrink the prefix: absorb its last step into the cycle whenever the
    # (type, index) pair there matches the last pair of the cycle.
    prefix = list(prefix)
    cycle = list(cycle)
    types_on_prefix = [tg.root_type]
    for i in prefix:
        types_on_prefix.append(tg.children[types_on_prefix[-1]][i])
    while prefix:
        t_end = types_on_prefix[-1]
        # type just before the last cycle step, walking from t_end
        cur = t_end
        for i in cycle[:-1]:
            cur = tg.children[cur][i]
        if prefix[-1] == cycle[-1] and types_on_prefix[-2] == cur:
            cycle.insert(0, cycle.pop())
            prefix.pop()
            types_on_prefix.pop()
        else:
            break
    return BoundaryPoint(tg, tuple(prefix), tuple(cycle))


def parse_point(tg: TypeGraph, text: str) -> BoundaryPoint:
    """Parse ``prefix(cycle)^inf``, e.g. ``01(0)^inf`` or ``(10)^inf``."""
    text = text.strip()
    if not text.endswith("^inf"):
        raise FormatError(f"point {text!r} must end with '^inf'")
    body = text[:-4]
    if not body.endswith(")") or "(" not in body:
        raise FormatError(f"point {text!r} must contain '(cycle)'")
    open_idx = body.index("(")
    prefix = parse_address(body[:open_idx])
    cycle = parse_address(body[open_idx + 1:-1])
    if not cycle:
        raise FormatError(f"point {text!r} has an empty cycle")
    try:
        return boundary_point(tg, prefix, cycle)
    except ValueError as e:
        raise FormatError(f"point {text!r}: {e}") from None


def visual_distance(x: BoundaryPoint, y: BoundaryPoint) -> Fraction:
    """d(x, y) = 2^(-length of the longest common address prefix); 0 iff x == y."""
    if x.tg != y.tg:
        raise ValueError("points over different type graphs")
    if x == y:
        return Fraction(0)
    import math
    bound = (max(len(x.prefix), len(y.prefix))
             + math.lcm(len(x.cycle), len(y.cycle)) + 1)
    for n in range(bound):
        if x.index_at(n) != y.index_at(n):
            return Fraction(1, 2 ** n)
    raise AssertionError("distinct canonical points must disagree within the bound")


def eps_exponent(eps: Fraction) -> int:
    """For eps = 2^-m (m >= 0) return m; reject anything else."""
    eps = Fraction(eps)
    if eps.numerator != 1 or eps.denominator < 1:
        raise ValueError(f"epsilon must be a power of 1/2, got {eps}")
    m = eps.denominator.bit_length() - 1
    if 2 ** m != eps.denominator:
        raise ValueError(f"epsilon must be a power of 1/2, got {eps}")
    return m


def parse_eps(text: str) -> Fraction:
    """Parse ``1``, ``2^-m`` or ``1/2^m`` style radii."""
    text = text.strip()
    if text in ("1", "2^0", "2^-0"):
        return Fraction(1)
    if text.startswith("2^-"):
        try:
            m = int(text[3:])
        except ValueError:
            raise FormatError(f"bad radius {text!r}") from None
        if m < 0:
            raise FormatError(f"bad radius {text!r}")
        return Fraction(1, 2 ** m)
    try:
        f = Fraction(text)
        eps_exponent(f)
    except ValueError:
        raise FormatError(f"bad radius {text!r}") from None
    return f


# ---------------------------------------------------------------------------
# Clopen sets
#
# A clopen set is stored as a trie whose nodes are True (the full ball below
# this vertex), False (empty), or a tuple of child nodes, one per child of the
# vertex.  Tuples are kept "proper": never all-True and never all-False.  This
# makes the representation canonical: two clopen sets denote the same subset
# of the boundary iff their tries are equal.  Note that the all-children merge
# also collapses along arity-1 chains, so balls at different vertices of a ray
# that carry the same points get the same representation.


def _node_union(tg: TypeGraph, t: str, a, b):
    if a is True or b is True:
        return True
    if a is False:
        return b
    if b is False:
        return a
    kids = tuple(_node_union(tg, ct, x, y)
                 for ct, x, y in zip(tg.children[t], a, b))
    if all(k is True for k in kids):
        return True
    return kids


def _node_intersect(tg: TypeGraph, t: str, a, b):
    if a is False or b is False:
        return False
    if a is True:
        return b
    if b is True:
        return a
    kids = tuple(_node_intersect(tg, ct, x, y)
                 for ct, x, y in zip(tg.children[t], a, b))
    if all(k is False for k in kids):
        return False
    return kids


def _node_complement(tg: TypeGraph, t: str, a):
    if a is True:
        return False
    if a is False:
        return True
    return tuple(_node_complement(tg, ct, x)
                 for ct, x in zip(tg.children[t], a))


def _node_subset(tg: TypeGraph, t: str, a, b) -> bool:
    if a is False or b is True:
        return True
    if b is False:
        return False  # a is not False here
    if a is True:
        return False  # b is a proper node, hence not the full ball
    return all(_node_subset(tg, ct, x, y)
               for ct, x, y in zip(tg.children[t], a, b))


def _node_ball(tg: TypeGraph, t: str, address: Address):
    arities = []
    cur = t
    for i in address:
        cs = tg.children[cur]
        arities.append(len(cs))
        cur = cs[i]
    node = True
    for i, a in zip(reversed(address), reversed(arities)):
        if a == 1:
            # one child: the ball below it is the whole ball here
            continue
        kids = [False] * a
        kids[i] = node
        node = tuple(kids)
    return node


def _node_balls(tg: TypeGraph, t: str, node, here: Address, out: list) -> None:
    if node is False:
        return
    if node is True:
        out.append(here)
        return
    for i, (ct, sub) in enumerate(zip(tg.children[t], node)):
        _node_balls(tg, ct, sub, here + (i,), out)


@dataclass(frozen=True)
class ClopenSet:
    """A finite union of balls of the boundary, in canonical trie form."""

    tg: TypeGraph
    node: object  # True | False | nested tuples

    @staticmethod
    def empty(tg: TypeGraph) -> "ClopenSet":
        return ClopenSet(tg, False)

    @staticmethod
    def full(tg: TypeGraph) -> "ClopenSet":
        return ClopenSet(tg, True)

    @staticmethod
    def ball(tg: TypeGraph, address: Sequence[int]) -> "ClopenSet":
        address = tuple(address)
        if not tg.is_valid_address(address):
            raise ValueError(f"invalid address {address_str(address)!r}")
        return ClopenSet(tg, _node_ball(tg, tg.root_type, address))

    @staticmethod
    def from_balls(tg: TypeGraph, addresses: Iterable[Sequence[int]]) -> "ClopenSet":
        out = ClopenSet.empty(tg)
        for a in addresses:
            out = out.union(ClopenSet.ball(tg, a))
        return out

    def _check(self, other: "ClopenSet") -> None:
        if self.tg != other.tg:
            raise ValueError("clopen sets over different type graphs")

    def union(self, other: "ClopenSet") -> "ClopenSet":
        self._check(other)
        return ClopenSet(self.tg, _node_union(self.tg, self.tg.root_type,
                                              self.node, other.node))

    def intersect(self, other: "ClopenSet") -> "ClopenSet":
        self._check(other)
        return ClopenSet(self.tg, _node_intersect(self.tg, self.tg.root_type,
                                                  self.node, other.node))

    def complement(self) -> "ClopenSet":
        return ClopenSet(self.tg, _node_complement(self.tg, self.tg.root_type,
                                                    self.node))

    def difference(self, other: "ClopenSet") -> "ClopenSet":
        return self.intersect(other.complement())

    def is_empty(self) -> bool:
        return self.node is False

    def is_all(self) -> bool:
        return self.node is True

    def subset_of(self, other: "ClopenSet") -> bool:
        self._check(other)
        return _node_subset(self.tg, self.tg.root_type, self.node, other.node)

    # operator sugar
    __or__ = union
    __and__ = intersect
    __sub__ = difference
    __invert__ = complement
    __le__ = subset_of

    def contains_point(self, x: BoundaryPoint) -> bool:
        if x.tg != self.tg:
            raise ValueError("point over a different type graph")
        node = self.node
        for i in x.indices():
            if node is True:
                return True
            if node is False:
                return False
            node = node[i]
        raise AssertionError("unreachable")

    def balls(self) -> tuple:
        """The canonical antichain of ball addresses, in depth-first order."""
        out: list = []
        _node_balls(self.tg, self.tg.root_type, self.node, (), out)
        return tuple(out)

    def ball_strs(self) -> list:
        return [address_str(a) for a in self.balls()]

    def __str__(self) -> str:
        if self.is_empty():
            return "{}"
        if self.is_all():
            return "{<all>}"
        return "{" + ", ".join(self.ball_strs()) + "}"


def epsilon_neighborhood(tg: TypeGraph, points: Iterable[BoundaryPoint],
                         eps: Fraction) -> ClopenSet:
    """The exact clopen set of ends within distance eps of the given finite set.

    eps must be a power of 1/2 (eps = 1 gives the full boundary whenever the
    set is nonempty).
    """
    m = eps_exponent(Fraction(eps))
    out = ClopenSet.empty(tg)
    for x in points:
        if x.tg != tg:
            raise ValueError("point over a different type graph")
        out = out.union(ClopenSet.ball(tg, x.address_prefix(m)))
    return out


def is_isolated(tg: TypeGraph, v: Sequence[int]) -> bool:
    """True iff the ball at vertex v is a single boundary point."""
    v = tuple(v)
    return tg.is_singleton_type(tg.type_at(v))


def point_is_isolated(x: BoundaryPoint) -> bool:
    """True iff x is an isolated point of the boundary."""
    # Only the types along one prefix-plus-cycle pass need checking: beyond
    # that the types repeat.
    for n in range(len(x.prefix) + len(x.cycle) + 1):
        if is_isolated(x.tg, x.address_prefix(n)):
            return True
    return False


def isolated_point_ball(x: BoundaryPoint) -> ClopenSet:
    """The singleton clopen {x}; raises if x is not isolated."""
    for n in range(len(x.prefix) + len(x.cycle) + 1):
        a = x.address_prefix(n)
        if is_isolated(x.tg, a):
            return ClopenSet.ball(x.tg, a)
    raise ValueError(f"point {x} is not isolated")


def eventually_periodic_witness(tg: TypeGraph, ball: Sequence[int]) -> BoundaryPoint:
    """The end below ``ball`` obtained by always descending to the least child.

    Deterministic, and always representable: the walk visits finitely many
    types so the least-child descent must cycle.
    """
    ball = tuple(ball)
    t = tg.type_at(ball)
    seen = {t: 0}
    seq = [t]
    cur = t
    while True:
        cur = tg.children[cur][0]
        if cur in seen:
            j = seen[cur]
            break
        seen[cur] = len(seq)
        seq.append(cur)
    prefix = ball + (0,) * j
    cycle = (0,) * (len(seq) - j)
    return boundary_point(tg, prefix, cycle)
