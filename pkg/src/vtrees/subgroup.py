"""Finitely generated subgroup machinery: words, closures, orbits, restriction.

Elements of a subgroup are enumerated in shortlex order over the alphabet
g1, g1^-1, g2, g2^-1, ..., deduplicated by normal form, so every search in
this package is reproducible: the first witness found is a deterministic
function of the generating set and the budgets.  Words are stored as tuples
of (generator name, +1/-1) letters and denote composition with the rightmost
letter applied first.

Budget-bounded searches return None when the budget is exhausted; exceeding
a budget is an answer, not an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .treespace import (
    Address,
    BoundaryPoint,
    ClopenSet,
    FormatError,
    TypeGraph,
    address_str,
)
from .element import (
    Element,
    GeneratorFamily,
    TreePair,
    compose,
    element_from_map,
    format_element,
    identity,
    parse_element,
    shape_at,
    shape_from_leaves,
    shape_leaves,
    shape_union,
)
from . import revealing

Word = tuple  # tuple[(name, +1 | -1), ...], rightmost letter acts first


@dataclass(frozen=True)
class Budgets:
    """Explicit bounds for every semi-decidable search."""

    word_length: int = 8
    orbit_size: int = 512
    expansion_depth: int = 12
    dovetail_steps: int = 10_000
    closure_size: int = 512


# ---------------------------------------------------------------------------
# Words


def word_inverse(word: Word) -> Word:
    return tuple((name, -sign) for name, sign in reversed(word))


def word_str(word: Word) -> str:
    if not word:
        return "id"
    out = []
    i = 0
    while i < len(word):
        name, sign = word[i]
        j = i
        while j < len(word) and word[j] == (name, sign):
            j += 1
        exp = (j - i) * sign
        out.append(name if exp == 1 else f"{name}^{exp}")
        i = j
    return "*".join(out)


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "id", "1"):
        return ()
    out = []
    for token in text.split("*"):
        token = token.strip()
        if "^" in token:
            name, _, exp_s = token.partition("^")
            try:
                exp = int(exp_s)
            except ValueError:
                raise FormatError(f"bad exponent in word token {token!r}") from None
        else:
            name, exp = token, 1
        name = name.strip()
        if not name:
            raise FormatError(f"empty generator name in word {text!r}")
        sign = 1 if exp > 0 else -1
        out.extend([(name, sign)] * abs(exp))
    return tuple(out)


# ---------------------------------------------------------------------------
# Generating sets


class GeneratingSet:
    """Named generators over one type graph (inverses are derived)."""

    def __init__(self, elements: Sequence[Element], names: Sequence[str] | None = None):
        elements = list(elements)
        if not elements:
            raise ValueError("a generating set must be nonempty")
        if names is None:
            names = [f"g{i + 1}" for i in range(len(elements))]
        names = [str(n) for n in names]
        if len(names) != len(elements):
            raise ValueError("names and elements differ in length")
        if len(set(names)) != len(names):
            raise ValueError("generator names must be distinct")
        tg = elements[0].tg
        for e in elements:
            if e.tg != tg:
                raise ValueError("generators over different type graphs")
        self.tg = tg
        self.elements = tuple(elements)
        self.names = tuple(names)

    @staticmethod
    def from_named(named: Mapping[str, Element]) -> "GeneratingSet":
        items = list(named.items())
        return GeneratingSet([e for _, e in items], [n for n, _ in items])

    def letters(self) -> tuple:
        """(word letter, element) for every generator and inverse, in
        enumeration order: generator order, plain before inverse."""
        out = []
        for name, e in zip(self.names, self.elements):
            out.append(((name, 1), e))
            out.append(((name, -1), e.inverse()))
        return tuple(out)

    def evaluate(self, word: Word) -> Element:
        table = dict(zip(self.names, self.elements))
        out = identity(self.tg)
        for name, sign in reversed(word):
            if name not in table:
                raise ValueError(f"unknown generator {name!r} in word")
            g = table[name] if sign > 0 else table[name].inverse()
            out = compose(g, out)
        return out

    def __repr__(self) -> str:
        return f"GeneratingSet({list(self.names)})"


def parse_generating_set(tg: TypeGraph, text: str) -> GeneratingSet:
    """Parse a generators file: one ``name = pair{...}`` per line.

    Blank lines and ``#`` comments are ignored.
    """
    names, elements = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected 'name = pair{{...}}'")
        name, _, rest = line.partition("=")
        name = name.strip()
        if not name or "*" in name or "^" in name:
            raise FormatError(f"line {lineno}: bad generator name {name!r}")
        try:
            elements.append(parse_element(tg, rest.strip()))
        except FormatError as e:
            raise FormatError(f"line {lineno}: {e}") from None
        names.append(name)
    if not names:
        raise FormatError("no generators found")
    return GeneratingSet(elements, names)


def format_generating_set(s: GeneratingSet) -> str:
    return "\n".join(f"{n} = {format_element(e)}"
                     for n, e in zip(s.names, s.elements)) + "\n"


# ---------------------------------------------------------------------------
# Enumeration and closure


def enumerate_elements(s: GeneratingSet, budget: int) -> Iterator[tuple]:
    """All subgroup elements of word length <= budget, shortlex order,
    deduplicated by normal form; yields (word, element) pairs."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    e0 = identity(s.tg)
    seen = {e0.key()}
    yield ((), e0)
    frontier = [((), e0)]
    letters = s.letters()
    for _ in range(budget):
        new = []
        for word, e in frontier:
            for letter, le in letters:
                if word and word[-1] == (letter[0], -letter[1]):
                    continue  # the free reduction was seen at a shorter length
                e2 = compose(e, le)
                k = e2.key()
                if k in seen:
                    continue
                seen.add(k)
                item = (word + (letter,), e2)
                new.append(item)
                yield item
        if not new:
            return
        frontier = new


@dataclass(frozen=True)
class EllipticityReport:
    """Outcome of scanning a subgroup for a non-elliptic element."""

    all_elliptic: bool
    witness: Element | None
    witness_word: Word | None
    checked: int
    budget: int
    exhausted: bool  # True when the whole subgroup was enumerated


def all_elliptic_or_witness(s: GeneratingSet, budget: int) -> EllipticityReport:
    """First non-elliptic element in enumeration order, or an exhaustion
    report stating that everything up to the budget is elliptic."""
    checked = 0
    count_at_budget = 0
    gen = enumerate_elements(s, budget)
    for word, e in gen:
        checked += 1
        if not revealing.is_elliptic(e):
            return EllipticityReport(False, e, word, checked, budget, False)
    # enumeration ended: either the closure is finite (frontier emptied) or
    # the budget cut it off; rerun one length further to tell which
    longer = sum(1 for _ in enumerate_elements(s, budget + 1))
    return EllipticityReport(True, None, None, checked, budget,
                             exhausted=(longer == checked))


@dataclass(frozen=True)
class GroupClosure:
    """A finite subgroup: its elements, their words, and the Cayley edges."""

    generating_set: GeneratingSet
    elements: tuple
    words: tuple
    edges: dict  # (element index, letter) -> element index

    def index_of(self, e: Element) -> int:
        for i, x in enumerate(self.elements):
            if x == e:
                return i
        raise KeyError("element not in closure")

    def __len__(self) -> int:
        return len(self.elements)


def finite_closure(s: GeneratingSet, bound: int) -> GroupClosure | None:
    """The full closure of the subgroup if it has at most ``bound`` elements,
    else None."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    e0 = identity(s.tg)
    elements = [e0]
    words = [()]
    index = {e0.key(): 0}
    letters = s.letters()
    edges = {}
    i = 0
    while i < len(elements):
        word, e = words[i], elements[i]
        for letter, le in letters:
            e2 = compose(e, le)
            k = e2.key()
            if k not in index:
                if len(elements) >= bound:
                    return None
                index[k] = len(elements)
                elements.append(e2)
                words.append(word + (letter,))
            edges[(i, letter)] = index[k]
        i += 1
    return GroupClosure(s, tuple(elements), tuple(words), edges)


# ---------------------------------------------------------------------------
# Common admissible partitions


@dataclass(frozen=True)
class AdmissiblePartition:
    """A partition of the boundary into balls, each contained in a domain
    leaf ball of every member of the group it was computed for."""

    tg: TypeGraph
    balls: tuple  # addresses, depth-first order

    def ball_strs(self) -> list:
        return [address_str(a) for a in self.balls]


def _image_partition(e: Element, shape):
    """Image of a ball partition (finer than e's domain tree) under e."""
    kappa = e.pair.leaf_map()
    out = []
    for b in shape_leaves(shape):
        node = e.pair.domain
        n = 0
        while node is not None:
            node = node[b[n]]
            n += 1
        u = b[:n]
        out.append(kappa[u] + b[n:])
    return shape_from_leaves(e.tg, out, e.tg.root_type)


def common_admissible_partition(closure: GroupClosure) -> AdmissiblePartition:
    """The coarsest ball partition refining every member's domain partition
    and stable under taking images; for a finite closure the iteration
    reaches a fixed point, which is then invariant as a partition."""
    tg = closure.generating_set.tg
    shape = None
    for e in closure.elements:
        shape = shape_union(tg, tg.root_type, shape, e.pair.domain)
    for _round in range(1000):
        new = shape
        for e in closure.elements:
            new = shape_union(tg, tg.root_type, new, _image_partition(e, new))
        if new == shape:
            return AdmissiblePartition(tg, tuple(shape_leaves(shape)))
        shape = new
    raise AssertionError("partition refinement did not stabilise")


# ---------------------------------------------------------------------------
# Orbits


@dataclass(frozen=True)
class Orbit:
    """A finite orbit, with a word mapping the seed to each point."""

    seed: BoundaryPoint
    points: tuple  # sorted
    words: dict    # point -> Word

    def __len__(self) -> int:
        return len(self.points)


def orbit(x: BoundaryPoint, s: GeneratingSet, bound: int) -> Orbit | None:
    """The orbit of x under the subgroup if it has at most ``bound`` points,
    else None.  Exact point arithmetic throughout."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if x.tg != s.tg:
        raise ValueError("point over a different type graph")
    words = {x: ()}
    queue = [x]
    letters = s.letters()
    i = 0
    while i < len(queue):
        y = queue[i]
        i += 1
        for letter, le in letters:
            z = le.apply_point(y)
            if z not in words:
                if len(words) >= bound:
                    return None
                words[z] = (letter,) + words[y]
                queue.append(z)
    pts = tuple(sorted(words, key=lambda p: p.sort_key()))
    return Orbit(x, pts, words)


# ---------------------------------------------------------------------------
# Restriction to an invariant clopen


def _clopen_shape(c: ClopenSet):
    """The complete-subtree shape whose leaves are the maximal balls on
    which c is constant."""

    def walk(node):
        if node is True or node is False:
            return None
        return tuple(walk(sub) for sub in node)

    return walk(c.node)


@dataclass(frozen=True)
class RestrictedElement:
    """The transformation induced on an invariant clopen set.

    Stored as the element that agrees with g on the support and is the
    identity elsewhere; this extension determines the restriction uniquely,
    composes like it, and is elliptic exactly when the restriction admits an
    invariant admissible partition of the support.  ``pieces`` recovers the
    partial antichain pair over the support.
    """

    support: ClopenSet
    extension: Element

    def _check(self, other: "RestrictedElement") -> None:
        if self.support != other.support:
            raise ValueError("restrictions to different clopen sets")

    def compose(self, other: "RestrictedElement") -> "RestrictedElement":
        self._check(other)
        return RestrictedElement(self.support,
                                 compose(self.extension, other.extension))

    __mul__ = compose

    def inverse(self) -> "RestrictedElement":
        return RestrictedElement(self.support, self.extension.inverse())

    def is_identity(self) -> bool:
        return self.extension.is_identity()

    def is_elliptic(self) -> bool:
        return revealing.is_elliptic(self.extension)

    def apply_point(self, x: BoundaryPoint) -> BoundaryPoint:
        if not self.support.contains_point(x):
            raise ValueError(f"{x} is outside the support")
        return self.extension.apply_point(x)

    def key(self) -> tuple:
        return self.extension.key()

    def pieces(self) -> tuple:
        """(source ball, image ball) pairs covering the support."""
        return tuple((u, w) for u, w in self.extension.pair.leaf_map().items()
                     if ClopenSet.ball(self.support.tg, u).subset_of(self.support))


def restrict(g: Element, w: ClopenSet) -> RestrictedElement:
    """The transformation g induces on the g-invariant clopen set w.

    Raises ValueError when w is not invariant (checked exactly).
    """
    if g.tg != w.tg:
        raise ValueError("clopen set over a different type graph")
    if g.apply_clopen(w) != w:
        raise ValueError("the clopen set is not invariant under the element")
    tg = g.tg
    refined = shape_union(tg, tg.root_type, g.pair.domain, _clopen_shape(w))
    kappa = g.pair.leaf_map()
    mapping = {}
    for leaf in shape_leaves(refined):
        inside = ClopenSet.ball(tg, leaf).subset_of(w)
        if inside:
            node = g.pair.domain
            n = 0
            while node is not None:
                node = node[leaf[n]]
                n += 1
            mapping[leaf] = kappa[leaf[:n]] + leaf[n:]
        else:
            mapping[leaf] = leaf
    return RestrictedElement(w, element_from_map(tg, mapping))


def restricted_closure(gens: Sequence[RestrictedElement], bound: int):
    """Closure of a family of restrictions to one support; None over bound."""
    if not gens:
        raise ValueError("need at least one restriction")
    support = gens[0].support
    for r in gens:
        if r.support != support:
            raise ValueError("restrictions to different clopen sets")
    ext = GeneratingSet([r.extension for r in gens])
    closure = finite_closure(ext, bound)
    if closure is None:
        return None
    return tuple(RestrictedElement(support, e) for e in closure.elements)
