"""Group elements as reduced tree pairs with canonical leaf identifications.

An element is stored as a pair of finite complete subtrees of the ambient
tree together with a bijection between their leaf sets; below each matched
leaf pair the element acts by *the* order-preserving subtree isomorphism,
which transports child indices verbatim.  Only leaf pairs whose subtree types
are order-isomorphic are allowed, so every element acts in a locally
order-preserving way and is a homothety of ratio 2^(depth(u) - depth(image))
on each domain leaf ball.

Normal form: no caret of the domain tree is mapped onto a caret of the range
tree child-by-child (such carets are contracted), and leaf pairs whose balls
are single points are pushed to the shallowest vertices of their rays.  The
second rule matters only for type graphs with isolated boundary points; it
makes the normal form unique per element there as well (two pairs that differ
below an isolated point denote the same homeomorphism).

Complete subtrees are stored as nested tuples ("shapes"): ``None`` is a leaf,
a tuple holds the shapes of the children.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .treespace import (
    Address,
    BoundaryPoint,
    ClopenSet,
    FormatError,
    TypeGraph,
    _node_union,
    address_str,
    boundary_point,
    parse_address,
)

# ---------------------------------------------------------------------------
# Complete-subtree shapes
#
# These helpers run on every composition and reduction, over trees whose
# depth grows with word length (powers of a Thompson-like move have depth
# proportional to the exponent), so they use explicit stacks, not recursion.


def shape_leaves(shape) -> list:
    """Relative addresses of the leaves, in depth-first order."""
    out: list = []
    stack = [((), shape)]
    while stack:
        here, node = stack.pop()
        if node is None:
            out.append(here)
            continue
        for i in range(len(node) - 1, -1, -1):
            stack.append((here + (i,), node[i]))
    return out


def shape_at(shape, address: Address):
    """Subshape at a relative address; None once a leaf is reached."""
    node = shape
    for i in address:
        if node is None:
            return None
        node = node[i]
    return node


def shape_from_leaves(tg: TypeGraph, leaves: Iterable[Address], root_type: str):
    """Build and validate the complete-subtree shape with the given leaf set.

    Raises ValueError when the addresses are not the exact leaf set of a
    complete subtree (missing siblings, prefix clashes, bad indices).
    """
    leaves = sorted(set(tuple(a) for a in leaves))
    if not leaves:
        raise ValueError("a complete tree has at least one leaf")
    if leaves == [()]:
        return None
    leaf_set = set(leaves)
    internal = {u[:k] for u in leaves for k in range(len(u))}
    clash = leaf_set & internal
    if clash:
        a = min(clash)
        raise ValueError(f"leaf {address_str(a)!r} is an ancestor of another leaf")
    # types of all vertices, built shallow-to-deep
    types = {(): root_type}
    for v in sorted(internal | leaf_set, key=len):
        if v == ():
            continue
        parent_type = types[v[:-1]]
        cs = tg.children[parent_type]
        if v[-1] >= len(cs):
            raise ValueError(f"index {v[-1]} out of range at "
                             f"{address_str(v[:-1])!r} (arity {len(cs)})")
        types[v] = cs[v[-1]]
    # assemble shapes deep-to-shallow
    shapes: dict = {u: None for u in leaves}
    for v in sorted(internal, key=len, reverse=True):
        a = tg.arity(types[v])
        kids = []
        for i in range(a):
            c = v + (i,)
            if c not in shapes:
                raise ValueError(f"missing branch {address_str(c)!r}: "
                                 "leaves do not cover the boundary")
            kids.append(shapes[c])
        shapes[v] = tuple(kids)
    return shapes[()]


def shape_union(tg: TypeGraph, t: str, a, b):
    """Common refinement (caret union) of two complete-subtree shapes."""
    if a is None:
        return b
    if b is None:
        return a
    la, lb = shape_leaves(a), shape_leaves(b)
    ia = {u[:k] for u in la for k in range(len(u))}
    ib = {u[:k] for u in lb for k in range(len(u))}
    sa = set(la)
    leaves = [u for u in la if u not in ib]
    leaves.extend(u for u in lb if u not in ia and u not in sa)
    return shape_from_leaves(tg, leaves, t)


def shape_caret_count(shape) -> int:
    if shape is None:
        return 0
    return 1 + sum(shape_caret_count(s) for s in shape)


# ---------------------------------------------------------------------------
# Tree pairs


class TreePair:
    """A pair of complete subtrees with a type-compatible leaf bijection.

    ``perm[i]`` is the index (in depth-first order) of the range leaf paired
    with the i-th domain leaf (also in depth-first order).
    """

    __slots__ = ("tg", "domain", "range", "perm", "domain_leaves",
                 "range_leaves", "_hash")

    def __init__(self, tg: TypeGraph, domain, range_, perm: Sequence[int]):
        self.tg = tg
        self.domain = domain
        self.range = range_
        self.perm = tuple(perm)
        self.domain_leaves = tuple(shape_leaves(domain))
        self.range_leaves = tuple(shape_leaves(range_))
        if len(self.domain_leaves) != len(self.range_leaves):
            raise ValueError("domain and range trees have different leaf counts")
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("perm is not a bijection of leaf indices")
        for u, pi in zip(self.domain_leaves, self.perm):
            w = self.range_leaves[pi]
            if not tg.subtree_order_isomorphic(tg.type_at(u), tg.type_at(w)):
                raise ValueError(
                    f"leaf {address_str(u)!r} (type {tg.type_at(u)!r}) cannot be "
                    f"paired with {address_str(w)!r} (type {tg.type_at(w)!r}): "
                    "subtrees are not order-isomorphic")
        self._hash = hash((tg, self.domain, self.range, self.perm))

    @staticmethod
    def from_map(tg: TypeGraph, mapping: Mapping[Address, Address]) -> "TreePair":
        dom = sorted(mapping)
        ran = sorted(mapping.values())
        index = {w: i for i, w in enumerate(ran)}
        domain = shape_from_leaves(tg, dom, tg.root_type)
        range_ = shape_from_leaves(tg, ran, tg.root_type)
        perm = tuple(index[mapping[u]] for u in dom)
        return TreePair(tg, domain, range_, perm)

    def leaf_map(self) -> dict:
        return {u: self.range_leaves[pi]
                for u, pi in zip(self.domain_leaves, self.perm)}

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, TreePair) and self.tg == other.tg
                and self.domain == other.domain and self.range == other.range
                and self.perm == other.perm)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return format_pair(self)


def format_pair(pair: TreePair) -> str:
    dom = ",".join(address_str(u) for u in pair.domain_leaves)
    ran = ",".join(address_str(w) for w in pair.range_leaves)
    perm = ",".join(str(i) for i in pair.perm)
    return f"pair{{domain=[{dom}], range=[{ran}], perm=[{perm}]}}"


_PAIR_RE = re.compile(
    r"^\s*pair\s*\{\s*domain\s*=\s*\[(?P<dom>[^]]*)\]\s*,\s*"
    r"range\s*=\s*\[(?P<ran>[^]]*)\]\s*,\s*"
    r"perm\s*=\s*\[(?P<perm>[^]]*)\]\s*\}\s*$")


def parse_pair(tg: TypeGraph, text: str) -> TreePair:
    """Parse the ``pair{domain=[...], range=[...], perm=[...]}`` format.

    An empty bracket pair denotes the single root leaf (a complete tree always
    has at least one leaf, so this is unambiguous).
    """
    m = _PAIR_RE.match(text)
    if not m:
        raise FormatError(f"not a tree pair: {text!r}")

    def addr_list(src: str) -> list:
        src = src.strip()
        if not src:
            return [()]
        return [parse_address(tok) for tok in src.split(",")]

    dom = addr_list(m.group("dom"))
    ran = addr_list(m.group("ran"))
    try:
        perm = [int(tok) for tok in m.group("perm").split(",")] if m.group("perm").strip() else []
    except ValueError:
        raise FormatError(f"bad perm in {text!r}") from None
    if not perm:
        raise FormatError(f"empty perm in {text!r}")
    try:
        domain = shape_from_leaves(tg, dom, tg.root_type)
        range_ = shape_from_leaves(tg, ran, tg.root_type)
        if sorted(dom) != dom or sorted(ran) != ran:
            raise ValueError("leaves must be listed in depth-first order")
        return TreePair(tg, domain, range_, perm)
    except ValueError as e:
        raise FormatError(f"invalid tree pair {text!r}: {e}") from None


# ---------------------------------------------------------------------------
# Reduction to normal form


def reduce(pair: TreePair) -> TreePair:
    """Contract the pair until no normal-form move applies.

    Moves: (a) caret contraction where the leaf bijection maps all children
    of a domain vertex onto all children of a range vertex index-by-index,
    applied bottom-up; (b) on leaf pairs whose ball is a single point, lift
    either side past arity-1 parents (this never changes the homeomorphism
    because both balls are the same singleton).
    """
    tg = pair.tg
    kappa = pair.leaf_map()

    def try_contract(p: Address):
        t = tg.type_at(p)
        a = tg.arity(t)
        kids = [p + (i,) for i in range(a)]
        if any(c not in kappa for c in kids):
            return None
        w0 = kappa[kids[0]]
        if not w0 or w0[-1] != 0:
            return None
        w = w0[:-1]
        if tg.arity(tg.type_at(w)) != a:
            return None
        for i in range(1, a):
            if kappa[kids[i]] != w + (i,):
                return None
        return w

    changed = True
    while changed:
        changed = False
        # caret contractions, deepest candidates first, cascading upward
        stack = sorted({u[:-1] for u in kappa if u})
        while stack:
            p = stack.pop()
            w = try_contract(p)
            if w is None:
                continue
            for i in range(tg.arity(tg.type_at(p))):
                del kappa[p + (i,)]
            kappa[p] = w
            changed = True
            if p:
                stack.append(p[:-1])
        # singleton ray lifts
        for u in sorted(kappa):
            if not tg.is_singleton_type(tg.type_at(u)):
                continue
            w = kappa[u]
            lifted = False
            while w and tg.arity(tg.type_at(w[:-1])) == 1:
                w = w[:-1]
                lifted = True
            u2 = u
            while u2 and tg.arity(tg.type_at(u2[:-1])) == 1:
                u2 = u2[:-1]
                lifted = True
            if lifted:
                del kappa[u]
                kappa[u2] = w
                changed = True
    return TreePair.from_map(tg, kappa)


# ---------------------------------------------------------------------------
# Elements


class Element:
    """A tree-boundary transformation in reduced tree-pair normal form.

    Construct with :func:`make_element`, :func:`identity`, the parsers, or the
    group operations; the constructor itself trusts that ``pair`` is reduced.
    """

    __slots__ = ("pair",)

    def __init__(self, pair: TreePair):
        self.pair = pair

    @property
    def tg(self) -> TypeGraph:
        return self.pair.tg

    def key(self) -> tuple:
        p = self.pair
        return (p.domain_leaves, p.range_leaves, p.perm)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Element) and self.tg == other.tg
                and self.pair == other.pair)

    def __hash__(self) -> int:
        return hash(self.pair)

    def __repr__(self) -> str:
        return format_pair(self.pair)

    def is_identity(self) -> bool:
        return self.pair.domain is None and self.pair.range is None

    def leaf_map(self) -> dict:
        return self.pair.leaf_map()

    def ratio(self, u: Address) -> Fraction:
        """Homothety ratio on the domain leaf ball at u."""
        w = self.leaf_map()[u]
        d = len(u) - len(w)
        return Fraction(2 ** d) if d >= 0 else Fraction(1, 2 ** (-d))

    # group structure -------------------------------------------------------

    def __mul__(self, other: "Element") -> "Element":
        return compose(self, other)

    def inverse(self) -> "Element":
        inv = {w: u for u, w in self.pair.leaf_map().items()}
        return Element(reduce(TreePair.from_map(self.tg, inv)))

    __invert__ = inverse

    def power(self, n: int) -> "Element":
        if n < 0:
            return self.inverse().power(-n)
        out = identity(self.tg)
        base = self
        while n:
            if n & 1:
                out = compose(base, out)
            base = compose(base, base) if n > 1 else base
            n >>= 1
        return out

    __pow__ = power

    # the action ------------------------------------------------------------

    def apply_point(self, x: BoundaryPoint) -> BoundaryPoint:
        if x.tg != self.tg:
            raise ValueError("point over a different type graph")
        node = self.pair.domain
        n = 0
        while node is not None:
            node = node[x.index_at(n)]
            n += 1
        u = x.address_prefix(n)
        w = self.pair.leaf_map()[u]
        tail_prefix, tail_cycle = x.drop(n)
        return boundary_point(self.tg, w + tail_prefix, tail_cycle)

    def apply_clopen(self, c: ClopenSet) -> ClopenSet:
        if c.tg != self.tg:
            raise ValueError("clopen set over a different type graph")
        tg = self.tg
        out = False
        for u, w in self.pair.leaf_map().items():
            sub = _trie_at(c.node, u)
            if sub is False:
                continue
            out = _node_union(tg, tg.root_type, out,
                              _trie_graft(tg, tg.root_type, w, sub))
        return ClopenSet(tg, out)

    def __call__(self, x):
        if isinstance(x, BoundaryPoint):
            return self.apply_point(x)
        if isinstance(x, ClopenSet):
            return self.apply_clopen(x)
        raise TypeError(f"cannot apply an element to {type(x).__name__}")


def _trie_at(node, address: Address):
    for i in address:
        if node is True or node is False:
            return node
        node = node[i]
    return node


def _trie_graft(tg: TypeGraph, t: str, address: Address, sub):
    if sub is False:
        return False
    arities = []
    cur = t
    for i in address:
        cs = tg.children[cur]
        arities.append(len(cs))
        cur = cs[i]
    node = sub
    for i, a in zip(reversed(address), reversed(arities)):
        if a == 1:
            continue
        kids: list = [False] * a
        kids[i] = node
        node = tuple(kids)
    return node


def identity(tg: TypeGraph) -> Element:
    return Element(TreePair(tg, None, None, (0,)))


def make_element(pair: TreePair) -> Element:
    """Reduce a valid tree pair to normal form and wrap it as an element."""
    return Element(reduce(pair))


def element_from_map(tg: TypeGraph, mapping: Mapping[Address, Address]) -> Element:
    return make_element(TreePair.from_map(tg, mapping))


def parse_element(tg: TypeGraph, text: str) -> Element:
    return make_element(parse_pair(tg, text))


def format_element(e: Element) -> str:
    return format_pair(e.pair)


def expand(e: Element, u: Sequence[int]) -> TreePair:
    """One caret expansion of e's pair at the domain leaf u (not reduced)."""
    u = tuple(u)
    kappa = e.pair.leaf_map()
    if u not in kappa:
        raise ValueError(f"{address_str(u)!r} is not a domain leaf")
    return expand_pair(e.pair, u)


def expand_pair(pair: TreePair, u: Address) -> TreePair:
    kappa = pair.leaf_map()
    w = kappa.pop(u)
    for i in range(pair.tg.arity(pair.tg.type_at(u))):
        kappa[u + (i,)] = w + (i,)
    return TreePair.from_map(pair.tg, kappa)


def expand_pair_by_shape(pair: TreePair, u: Address, shape) -> TreePair:
    """Graft a complete-subtree shape below the domain leaf u (and its image)."""
    if shape is None:
        return pair
    kappa = pair.leaf_map()
    w = kappa.pop(u)
    for s in shape_leaves(shape):
        kappa[u + s] = w + s
    return TreePair.from_map(pair.tg, kappa)


def refine_domain(pair: TreePair, shape) -> TreePair:
    """Expand so that the domain tree equals ``shape`` (which must refine it)."""
    kappa = {}
    for u, w in pair.leaf_map().items():
        sub = shape_at(shape, u)
        if sub is None:
            kappa[u] = w
        else:
            for s in shape_leaves(sub):
                kappa[u + s] = w + s
    return TreePair.from_map(pair.tg, kappa)


def refine_range(pair: TreePair, shape) -> TreePair:
    """Expand so that the range tree equals ``shape`` (which must refine it)."""
    kappa = {}
    for u, w in pair.leaf_map().items():
        sub = shape_at(shape, w)
        if sub is None:
            kappa[u] = w
        else:
            for s in shape_leaves(sub):
                kappa[u + s] = w + s
    return TreePair.from_map(pair.tg, kappa)


def compose(g: Element, h: Element) -> Element:
    """The element g o h (h applied first)."""
    if g.tg != h.tg:
        raise ValueError("elements over different type graphs")
    tg = g.tg
    common = shape_union(tg, tg.root_type, h.pair.range, g.pair.domain)
    h2 = refine_range(h.pair, common)
    g2 = refine_domain(g.pair, common)
    gmap = g2.leaf_map()
    composed = {u: gmap[w] for u, w in h2.leaf_map().items()}
    return Element(reduce(TreePair.from_map(tg, composed)))


def inverse(g: Element) -> Element:
    return g.inverse()


def apply_point(g: Element, x: BoundaryPoint) -> BoundaryPoint:
    return g.apply_point(x)


def apply_clopen(g: Element, c: ClopenSet) -> ClopenSet:
    return g.apply_clopen(c)


def equals(g: Element, h: Element) -> bool:
    return g == h


def is_identity(g: Element) -> bool:
    return g.is_identity()


# ---------------------------------------------------------------------------
# Built-in generating families


class GeneratorFamily(Mapping):
    """Named elements, with a diagnostic when no family is constructed."""

    def __init__(self, elements: Mapping[str, Element], diagnostic: str | None = None):
        self._elements = dict(elements)
        self.diagnostic = diagnostic

    def __getitem__(self, name: str) -> Element:
        return self._elements[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._elements)

    def __len__(self) -> int:
        return len(self._elements)

    def __repr__(self) -> str:
        if self.diagnostic:
            return f"GeneratorFamily({{}}, diagnostic={self.diagnostic!r})"
        return f"GeneratorFamily({list(self._elements)})"


def _uniform_profile(tg: TypeGraph):
    """(k, d, base) if the tree is k-ary at ``base`` and uniformly d-ary below."""
    r = tg.root_type
    kids = tg.children[r]
    c0 = kids[0]
    if any(not tg.subtree_order_isomorphic(c, c0) for c in kids):
        return None
    if any(not tg.subtree_order_isomorphic(c, c0) for c in tg.children[c0]):
        return None
    return len(kids), tg.arity(c0)


def builtin_generators(tg: TypeGraph) -> GeneratorFamily:
    """A standard generating family for uniform-arity trees.

    For the binary tree this is {x0, x1, sigma, tau}: the two Thompson moves,
    the swap of the depth-1 balls and the swap of the two halves of the last
    depth-1 ball.  For a k-ary root over a uniformly d-ary tree the analogous
    moves are produced, plus the root k-cycle ``rho`` (k >= 3) and the d-cycle
    ``delta`` below the last root ball (d >= 3).  For other type graphs no
    family is claimed and a diagnostic is returned instead.
    """
    profile = _uniform_profile(tg)
    if profile is None:
        return GeneratorFamily({}, diagnostic=(
            "no built-in generating family: the tree is not uniformly "
            "branching below the root"))
    k, d = profile
    if k < 2 and d < 2:
        return GeneratorFamily({}, diagnostic=(
            "no built-in generating family: the boundary is a single point"))
    out: dict = {}

    def elem(mapping):
        return element_from_map(tg, mapping)

    if k >= 2 and d >= 1:
        # x0: split the first root ball, merge into the last one
        dom = [(0, i) for i in range(d)] + [(j,) for j in range(1, k)]
        ran = [(j,) for j in range(k - 1)] + [(k - 1, i) for i in range(d)]
        out["x0"] = elem(dict(zip(sorted(dom), sorted(ran))))
        if d >= 2:
            # x1: the same move one level down inside the last root ball
            last = (k - 1,)
            dom = ([(j,) for j in range(k - 1)]
                   + [last + (0, i) for i in range(d)]
                   + [last + (j,) for j in range(1, d)])
            ran = ([(j,) for j in range(k - 1)]
                   + [last + (j,) for j in range(d - 1)]
                   + [last + (d - 1, i) for i in range(d)])
            out["x1"] = elem(dict(zip(sorted(dom), sorted(ran))))
    if k >= 2:
        swap = {(j,): (j,) for j in range(k)}
        swap[(0,)], swap[(1,)] = (1,), (0,)
        out["sigma"] = elem(swap)
    if d >= 2:
        last = (k - 1,)
        m = {(j,): (j,) for j in range(k - 1)}
        for i in range(d):
            m[last + (i,)] = last + (i,)
        m[last + (0,)], m[last + (1,)] = last + (1,), last + (0,)
        out["tau"] = elem(m)
    if k >= 3:
        out["rho"] = elem({(j,): ((j + 1) % k,) for j in range(k)})
    if d >= 3:
        last = (k - 1,)
        m = {(j,): (j,) for j in range(k - 1)}
        for i in range(d):
            m[last + (i,)] = last + ((i + 1) % d,)
        out["delta"] = elem(m)
    out = {name: e for name, e in out.items() if not e.is_identity()}
    if not out:
        return GeneratorFamily({}, diagnostic=(
            "no built-in generating family: all candidate moves are trivial"))
    return GeneratorFamily(out)


# ---------------------------------------------------------------------------
# Random elements (test corpus generation)


def random_complete_shape(tg: TypeGraph, carets: int, rng: random.Random):
    """A random complete subtree grown by ``carets`` uniform leaf expansions."""
    cur = [()]
    for _ in range(carets):
        cur.sort()
        u = cur.pop(rng.randrange(len(cur)))
        for i in range(tg.arity(tg.type_at(u))):
            cur.append(u + (i,))
    return shape_from_leaves(tg, cur, tg.root_type)


def random_element(tg: TypeGraph, size: int, rng_or_seed) -> Element:
    """A random reduced element whose trees have at most ``size`` carets each.

    Deterministic in the seed.  Raises ValueError when no type-compatible
    leaf bijection could be sampled at any shape up to the requested size.
    """
    rng = (rng_or_seed if isinstance(rng_or_seed, random.Random)
           else random.Random(rng_or_seed))
    if size < 0:
        raise ValueError("size must be >= 0")
    for _attempt in range(200):
        c = rng.randint(0, size)
        dom_shape = random_complete_shape(tg, c, rng)
        ran_shape = random_complete_shape(tg, c, rng)
        dom = shape_leaves(dom_shape)
        ran = shape_leaves(ran_shape)
        by_color_d: dict = {}
        by_color_r: dict = {}
        for u in dom:
            by_color_d.setdefault(tg._ordered_color[tg.type_at(u)], []).append(u)
        for w in ran:
            by_color_r.setdefault(tg._ordered_color[tg.type_at(w)], []).append(w)
        if {c_: len(v) for c_, v in by_color_d.items()} != \
           {c_: len(v) for c_, v in by_color_r.items()}:
            continue
        mapping = {}
        for color, us in sorted(by_color_d.items()):
            ws = list(by_color_r[color])
            rng.shuffle(ws)
            for u, w in zip(us, ws):
                mapping[u] = w
        return element_from_map(tg, mapping)
    raise ValueError("could not sample a type-compatible leaf bijection "
                     f"at any shape with <= {size} carets")
