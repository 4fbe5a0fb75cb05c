"""Independent oracles used by the tests.

Everything here recomputes answers from first principles without going
through the library's own machinery, so the tests compare two genuinely
different routes to the same value:

- a string-map engine for tree-pair transformations (compose / contract /
  identity test / bounded order search), fast enough to take a thousand
  powers of an element;
- finite unrollings of type graphs for isomorphism checks;
- depth-n enumeration of ball addresses for clopen membership.
"""

from __future__ import annotations

import itertools


# ---------------------------------------------------------------------------
# String-map engine.  An element is a dict {source leaf -> image leaf} over
# digit-string addresses; keys form the leaf set of a finite complete tree
# and the element maps each source ball onto its image ball preserving the
# tail.  This mirrors the library's semantics but shares none of its code.


def to_strmap(element) -> dict:
    return {"".join(map(str, u)): "".join(map(str, w))
            for u, w in element.pair.leaf_map().items()}


def compose_strmaps(gmap: dict, hmap: dict) -> dict:
    """g after h, by refining h until its images land in g's source leaves."""
    out = {}
    gmaxlen = max(map(len, gmap))
    for u, w in hmap.items():
        v = None
        for k in range(min(len(w), gmaxlen) + 1):
            v = gmap.get(w[:k])
            if v is not None:
                out[u] = v + w[k:]
                break
        if v is None:
            for key, val in gmap.items():
                if key.startswith(w):
                    out[u + key[len(w):]] = val
    return out


def reduce_strmap(m: dict, arity_of) -> dict:
    """Contract carets mapped child-by-child onto carets."""
    m = dict(m)
    stack = sorted({u[:-1] for u in m if u})
    while stack:
        p = stack.pop()
        a = arity_of(p)
        vals = [m.get(p + str(i)) for i in range(a)]
        if any(v is None for v in vals):
            continue
        w0 = vals[0]
        if not w0 or w0[-1] != "0":
            continue
        wp = w0[:-1]
        if all(vals[i] == wp + str(i) for i in range(1, a)):
            for i in range(a):
                del m[p + str(i)]
            m[p] = wp
            if p:
                stack.append(p[:-1])
    return m


def strmap_is_identity(m: dict) -> bool:
    return all(u == w for u, w in m.items())


def strmap_apply(m: dict, point: str, periodic_from: int) -> str:
    """Apply to an eventually periodic point given as a long finite string
    whose tail from ``periodic_from`` repeats; returns a finite-string image
    long enough for prefix comparisons (test helper, not exact arithmetic)."""
    for u, w in m.items():
        if point.startswith(u):
            return w + point[len(u):]
    raise AssertionError("point escaped the leaf partition")


def brute_force_order_search(element, arity_of, leaf_to_carets,
                             nmax: int = 1000):
    """Least n <= nmax with element^n == id, else None; by normal forms.

    Powers are taken in the string-map engine and contracted to normal form
    after every step.  Early exit is sound: caret counts are subadditive
    under composition (c(gh) <= c(g) + c(h), hence c(gh) >= c(h) - c(g)), so
    once c(g^n) > (nmax - n) * c(g) no later power up to nmax can be trivial.
    """
    if element.is_identity():
        return 1
    gred = reduce_strmap(to_strmap(element), arity_of)
    s1 = max(leaf_to_carets(len(gred)), 1)
    cur = dict(gred)
    for n in range(1, nmax + 1):
        if strmap_is_identity(cur):
            return n
        if leaf_to_carets(len(cur)) > (nmax - n) * s1:
            return None
        cur = reduce_strmap(compose_strmaps(gred, cur), arity_of)
    return None


def binary_helpers():
    """(arity_of, leaf_to_carets) for the uniform binary tree."""
    return (lambda p: 2), (lambda leaves: leaves - 1)


def wide_helpers():
    """(arity_of, leaf_to_carets) for the 3-children-at-the-root binary tree."""
    return (lambda p: 3 if p == "" else 2), \
           (lambda leaves: 0 if leaves == 1 else leaves - 2)


# ---------------------------------------------------------------------------
# Finite unrollings for isomorphism oracles


def unroll(tg, t: str, depth: int):
    """The ordered tree below a type, truncated at the given depth."""
    if depth == 0:
        return "*"
    return tuple(unroll(tg, c, depth - 1) for c in tg.children[t])


def unordered_canon(tree):
    if tree == "*":
        return "*"
    return tuple(sorted(unordered_canon(c) for c in tree))


def iso_to_depth(tg, s: str, t: str, depth: int) -> bool:
    """Rooted-tree isomorphism of the depth-d unrollings, children matched
    by any bijection."""
    return unordered_canon(unroll(tg, s, depth)) == \
        unordered_canon(unroll(tg, t, depth))


def order_iso_to_depth(tg, s: str, t: str, depth: int) -> bool:
    return unroll(tg, s, depth) == unroll(tg, t, depth)


# ---------------------------------------------------------------------------
# Depth-n enumeration for clopen membership


def addresses_at_depth(tg, n: int):
    out = [()]
    for _ in range(n):
        nxt = []
        for a in out:
            for i in range(tg.arity(tg.type_at(a))):
                nxt.append(a + (i,))
        out = nxt
    return out


def contains_point_bruteforce(c, x, depth: int) -> bool:
    """Membership via the depth-n prefix: valid whenever depth is at least
    the deepest ball of c."""
    prefix = x.address_prefix(depth)
    for b in c.balls():
        if len(b) <= depth and prefix[:len(b)] == b:
            return True
    return False


def max_ball_depth(c) -> int:
    return max((len(b) for b in c.balls()), default=0)
