"""The dichotomy engine: contraction elements, ping-pong pairs, the driver.

For a finitely generated subgroup the driver produces one of two exactly
verified certificates:

- a finite orbit (re-checkable by closing the point set under the
  generators), or
- a ping-pong pair: elements g, h and pairwise disjoint clopen sets
  U1, V1, U2, V2 with g(X - U1) inside V1 and h(X - U2) inside V2, which
  forces g and h to generate a nonabelian free group.

The route to a ping-pong pair follows the structure of the underlying
theory, but every analytic step is replaced by exact clopen arithmetic:

1. accumulate elements until the intersection of their stable parts is
   verifiably empty;
2. build a contraction element mapping everything outside a neighborhood of
   the finitely many hyperbolic periodic points back into it, using exact
   identity powers on the stable parts instead of recurrence arguments;
3. translate the base point set off itself twice (Neumann-style search) and
   conjugate the contraction to two pairs with disjoint supports.

When the intersection of stable parts empties, a finite orbit (if one exists
at all) must meet every neighborhood of the hyperbolic point set: any
invariant probability measure gives at least half its mass to each such
neighborhood, so it has an atom among those finitely many points.  Scanning
their orbits is therefore a complete finite-orbit search in that branch; see
docs/dynamics_notes.md for the full argument.

Budgets bound every search; exhausting them yields an Undecided verdict
carrying the frontier state, never a wrong certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .treespace import (
    BoundaryPoint,
    ClopenSet,
    TypeGraph,
    epsilon_neighborhood,
    eps_exponent,
)
from .element import Element, compose, identity
from .revealing import DynamicsReport, dynamics
from .subgroup import (
    Budgets,
    GeneratingSet,
    Orbit,
    Word,
    enumerate_elements,
    orbit,
    restrict,
    restricted_closure,
    word_inverse,
    word_str,
)


def stable_set(g: Element) -> ClopenSet:
    """The clopen part of the boundary on which some positive power of g
    acts as the identity."""
    return dynamics(g).stable


def stable_intersection(hs: Sequence[Element],
                        tg: TypeGraph | None = None) -> ClopenSet:
    """Exact intersection of the stable parts.

    The empty intersection is the full boundary; pass ``tg`` to make that
    case well-typed (it is required only when ``hs`` is empty).
    """
    hs = list(hs)
    if not hs:
        if tg is None:
            raise ValueError("an empty intersection needs an explicit type graph")
        return ClopenSet.full(tg)
    out = ClopenSet.full(hs[0].tg)
    for h in hs:
        out = out.intersect(stable_set(h))
    return out


def stable_intersection_over(tg: TypeGraph, hs: Sequence[Element]) -> ClopenSet:
    out = ClopenSet.full(tg)
    for h in hs:
        out = out.intersect(stable_set(h))
    return out


# ---------------------------------------------------------------------------
# Contraction elements


@dataclass(frozen=True)
class ProximalStage:
    """One factor of a contraction element, with its exact set inclusion."""

    word: Word | None
    isometric_power: int
    multiplier: int           # the factor used is element ** (isometric_power * multiplier)
    before: ClopenSet
    after: ClopenSet
    allowed: ClopenSet        # after <= allowed was checked exactly


@dataclass(frozen=True)
class ProximalContraction:
    """An element h with h(X - B^eps) inside B^eps, B the hyperbolic points."""

    element: Element
    word: Word | None
    points: tuple
    eps: Fraction
    stages: tuple
    start: ClopenSet   # X - B^eps
    target: ClopenSet  # B^eps


@dataclass(frozen=True)
class ContractionPair:
    """Finite sets (a, b) such that for each requested radius some subgroup
    element maps everything outside a's neighborhood into b's neighborhood."""

    a_points: tuple
    b_points: tuple
    witnesses: dict  # eps -> (Element, Word | None)

    @property
    def cardinality_bound(self) -> int:
        return max(len(self.a_points), len(self.b_points))


_STAGE_POWER_CAP = 512
_ROUND_CAP = 16


def proximal_contraction(hs: Sequence[Element], eps: Fraction,
                         words: Sequence[Word] | None = None,
                         reports: Sequence[DynamicsReport] | None = None) -> ProximalContraction:
    """A product of powers of the given elements contracting the complement
    of B^eps into B^eps, where B collects all their hyperbolic periodic
    points.  Requires the intersection of their stable parts to be empty.

    Each factor is a power of one element, a multiple of its isometric power
    so that it fixes that element's stable part pointwise; the per-stage
    inclusion image <= (previous & stable part) | hyperbolic-points^eps is
    checked exactly and recorded, and the telescoped product then lands in
    B^eps because the stable parts have empty intersection.
    """
    hs = list(hs)
    if not hs:
        raise ValueError("need at least one element")
    eps = Fraction(eps)
    eps_exponent(eps)
    tg = hs[0].tg
    if reports is None:
        reports = [dynamics(h) for h in hs]
    reports = list(reports)
    if words is not None:
        words = list(words)
    inter = ClopenSet.full(tg)
    for rep in reports:
        inter = inter.intersect(rep.stable)
    if not inter.is_empty():
        raise ValueError("the stable parts have nonempty intersection: "
                         f"{inter.ball_strs()}")
    b_points = sorted({p for rep in reports
                       for p in rep.attracting_periodic + rep.repelling_periodic},
                      key=lambda p: p.sort_key())
    if not b_points:
        raise ValueError("degenerate input: no hyperbolic periodic points "
                         "although the stable parts have empty intersection")
    target = epsilon_neighborhood(tg, b_points, eps)
    start = target.complement()

    minimums = [1] * len(hs)
    for _round in range(_ROUND_CAP):
        cur = start
        stages = []
        factors = []
        failed_at = None
        for i, (h, rep) in enumerate(zip(hs, reports)):
            m = rep.isometric_power
            hm = h.power(m)
            pts = rep.attracting_periodic + rep.repelling_periodic
            allowed = cur.intersect(rep.stable).union(
                epsilon_neighborhood(tg, pts, eps) if pts else ClopenSet.empty(tg))
            t = minimums[i]
            image = cur
            for _ in range(t):
                image = hm.apply_clopen(image)
            while not image.subset_of(allowed) and t < _STAGE_POWER_CAP:
                image = hm.apply_clopen(image)
                t += 1
            if not image.subset_of(allowed):
                failed_at = i
                break
            stages.append(ProximalStage(
                word=(words[i] if words is not None else None),
                isometric_power=m, multiplier=t,
                before=cur, after=image, allowed=allowed))
            factors.append((h, m * t, i))
            cur = image
        if failed_at is None:
            element = identity(tg)
            word: Word | None = () if words is not None else None
            for h, p, i in factors:
                element = compose(h.power(p), element)
                if words is not None:
                    word = tuple(words[i]) * p + word
            if not element.apply_clopen(start).subset_of(target):
                raise AssertionError("contraction element failed its final check")
            return ProximalContraction(element, word, tuple(b_points), eps,
                                       tuple(stages), start, target)
        # points escaping slowly near stage i's repellers: shrink the dust
        # left by the earlier stages and retry
        for j in range(failed_at):
            minimums[j] *= 2
    raise RuntimeError("contraction search did not converge within the round cap")


# ---------------------------------------------------------------------------
# Neumann-style disjointification


def neumann_disjoint(s: GeneratingSet, a_points: Iterable[BoundaryPoint],
                     b_points: Iterable[BoundaryPoint], budget: int):
    """First element (in enumeration order) mapping the finite set A off the
    finite set B; None when the budget is exhausted."""
    a_points = list(a_points)
    b_set = set(b_points)
    for word, e in enumerate_elements(s, budget):
        if all(e.apply_point(p) not in b_set for p in a_points):
            return word, e
    return None


# ---------------------------------------------------------------------------
# Ping-pong pairs


@dataclass(frozen=True)
class PingPongWitness:
    """Elements g, h and disjoint clopens with g(X-U1) <= V1, h(X-U2) <= V2."""

    g: Element
    h: Element
    u1: ClopenSet
    v1: ClopenSet
    u2: ClopenSet
    v2: ClopenSet
    g_word: Word | None = None
    h_word: Word | None = None
    contraction_pairs: tuple | None = None


def verify_pingpong(w: PingPongWitness):
    """(ok, reason): exact check of pairwise disjointness and both inclusions."""
    sets = [("U1", w.u1), ("U2", w.u2), ("V1", w.v1), ("V2", w.v2)]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if not sets[i][1].intersect(sets[j][1]).is_empty():
                return False, f"disjointness ({sets[i][0]} meets {sets[j][0]})"
    if not w.g.apply_clopen(w.u1.complement()).subset_of(w.v1):
        return False, "inclusion 1"
    if not w.h.apply_clopen(w.u2.complement()).subset_of(w.v2):
        return False, "inclusion 2"
    return True, None


def free_group_smoke(g: Element, h: Element, length: int) -> bool:
    """True iff every nonempty reduced word in g, h of length <= length is
    not the identity (a sanity companion to a verified ping-pong pair)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    letters = [g, g.inverse(), h, h.inverse()]
    inverse_of = {0: 1, 1: 0, 2: 3, 3: 2}
    frontier = []
    for i, le in enumerate(letters):
        if le.is_identity():
            return False
        frontier.append((i, le))
    for _ in range(length - 1):
        new = []
        for last, e in frontier:
            for i, le in enumerate(letters):
                if i == inverse_of[last]:
                    continue
                e2 = compose(e, le)
                if e2.is_identity():
                    return False
                new.append((i, e2))
        frontier = new
    return True


def _shrink_radius(tg: TypeGraph, points, predicate, depth_budget: int):
    """Largest radius 2^-m (m < depth_budget) whose neighborhood of the
    points satisfies the predicate; None if none does."""
    for m in range(depth_budget + 1):
        eps = Fraction(1, 2 ** m)
        nbhd = epsilon_neighborhood(tg, points, eps)
        if predicate(nbhd, eps):
            return eps
    return None


def build_pingpong(s: GeneratingSet, budgets: Budgets = Budgets(),
                   context=None):
    """A verified ping-pong witness for the subgroup, or None over budget.

    ``context`` may carry (elements, words, reports) whose stable parts are
    already known to intersect emptily; otherwise the enumeration is run
    until that happens (or the word budget runs out).
    """
    tg = s.tg
    if context is None:
        hs, hw, hr = [], [], []
        inter = ClopenSet.full(tg)
        for word, e in enumerate_elements(s, budgets.word_length):
            rep = dynamics(e)
            if rep.stable.is_all():
                continue
            hs.append(e)
            hw.append(word)
            hr.append(rep)
            inter = inter.intersect(rep.stable)
            if inter.is_empty():
                break
        if not inter.is_empty():
            return None
    else:
        hs, hw, hr = context

    b_points = sorted({p for rep in hr
                       for p in rep.attracting_periodic + rep.repelling_periodic},
                      key=lambda p: p.sort_key())
    if not b_points:
        return None

    found = neumann_disjoint(s, b_points, b_points, budgets.word_length)
    if found is None:
        return None
    u_word, u = found
    a1 = [u.apply_point(p) for p in b_points]
    b1 = list(b_points)
    spread = sorted(set(a1) | set(b1), key=lambda p: p.sort_key())
    found = neumann_disjoint(s, spread, spread, budgets.word_length)
    if found is None:
        return None
    w_word, w = found
    a2 = [w.apply_point(p) for p in a1]
    b2 = [w.apply_point(p) for p in b1]

    depth = max(budgets.expansion_depth, 2)
    star = None
    for m in range(depth + 1):
        eps = Fraction(1, 2 ** m)
        nb = [epsilon_neighborhood(tg, pts, eps) for pts in (a1, b1, a2, b2)]
        if all(nb[i].intersect(nb[j]).is_empty()
               for i in range(4) for j in range(i + 1, 4)):
            star = eps
            break
    if star is None:
        return None
    u1, v1, u2, v2 = (epsilon_neighborhood(tg, pts, star)
                      for pts in (a1, b1, a2, b2))

    # g1 = contraction o u^-1 maps X - U1 into V1 once B^delta sits inside
    # u^-1(U1); the contraction then keeps it inside B^delta <= V1.
    uinv = u.inverse()
    pull1 = uinv.apply_clopen(u1)
    delta1 = _shrink_radius(
        tg, b_points,
        lambda nbhd, eps: eps <= star and nbhd.subset_of(pull1),
        depth)
    if delta1 is None:
        return None
    c1 = proximal_contraction(hs, delta1, words=hw, reports=hr)
    g1 = compose(c1.element, uinv)
    g1_word = (c1.word + word_inverse(u_word)) if c1.word is not None else None

    wu = compose(w, u)
    wuinv = wu.inverse()
    pull2 = wuinv.apply_clopen(u2)
    delta2 = _shrink_radius(
        tg, b_points,
        lambda nbhd, eps: (eps <= star and nbhd.subset_of(pull2)
                           and w.apply_clopen(nbhd).subset_of(v2)),
        depth)
    if delta2 is None:
        return None
    c2 = proximal_contraction(hs, delta2, words=hw, reports=hr)
    g2 = compose(w, compose(c2.element, wuinv))
    g2_word = (tuple(w_word) + c2.word + word_inverse(tuple(w_word) + tuple(u_word))
               if c2.word is not None else None)

    # the recorded witnesses contract the complement of the A-neighborhood
    # into the B-neighborhood at the separation radius
    pairs = (ContractionPair(tuple(a1), tuple(b1), {star: (g1, g1_word)}),
             ContractionPair(tuple(a2), tuple(b2), {star: (g2, g2_word)}))
    witness = PingPongWitness(g1, g2, u1, v1, u2, v2, g1_word, g2_word, pairs)
    ok, reason = verify_pingpong(witness)
    if not ok:
        raise AssertionError(f"constructed witness failed verification: {reason}")
    return witness


# ---------------------------------------------------------------------------
# The dichotomy driver


@dataclass(frozen=True)
class DichotomyResult:
    """Verdict of the driver: exactly one of the payloads is set unless the
    verdict is 'undecided', in which case diagnostics carry the frontier."""

    verdict: str  # "finite-orbit" | "ping-pong" | "undecided"
    orbit: Orbit | None = None
    witness: PingPongWitness | None = None
    diagnostics: dict | None = None


def _try_invariant_branch(s: GeneratingSet, w: ClopenSet, budgets: Budgets):
    """Finite-orbit search on a nonempty candidate stable core w."""
    from .treespace import eventually_periodic_witness

    # direct orbit probes from a witness point in each ball
    for ball in w.balls()[:16]:
        xi = eventually_periodic_witness(s.tg, ball)
        res = orbit(xi, s, budgets.orbit_size)
        if res is not None:
            return res
    # equicontinuity certificate: if w is invariant under every generator and
    # the restricted closure is finite, any witness orbit closes
    for e in s.elements:
        if e.apply_clopen(w) != w:
            return None
    closure = restricted_closure([restrict(e, w) for e in s.elements],
                                 budgets.closure_size)
    if closure is None:
        return None
    xi = eventually_periodic_witness(s.tg, w.balls()[0])
    return orbit(xi, s, max(budgets.orbit_size, len(closure) + 1))


def dichotomy(s: GeneratingSet, budgets: Budgets = Budgets()) -> DichotomyResult:
    """Decide, with an exact certificate, whether the subgroup has a finite
    orbit or admits a ping-pong pair; Undecided only on budget exhaustion.

    The driver enumerates subgroup elements, intersecting their stable parts.
    While the intersection is nonempty it looks for finite orbits inside it;
    as soon as it is verifiably empty, the orbits of the accumulated
    hyperbolic periodic points form a complete finite-orbit search, dovetailed
    against the ping-pong construction.
    """
    tg = s.tg
    steps = 0
    inter = ClopenSet.full(tg)
    contributors: list = []
    last_checked = None
    scanned = 0

    for word, e in enumerate_elements(s, budgets.word_length):
        steps += 1
        scanned += 1
        if steps > budgets.dovetail_steps:
            return DichotomyResult("undecided", diagnostics=_diag(
                s, budgets, scanned, inter, contributors,
                reason="dovetail step budget exhausted"))
        rep = dynamics(e)
        if not rep.stable.is_all():
            contributors.append((word, e, rep))
            inter = inter.intersect(rep.stable)
        if inter.is_empty():
            return _empty_core_branch(s, budgets, contributors, scanned)
        if inter != last_checked:
            last_checked = inter
            res = _try_invariant_branch(s, inter, budgets)
            if res is not None:
                return DichotomyResult("finite-orbit", orbit=res)
    if not inter.is_empty():
        res = _try_invariant_branch(s, inter, budgets)
        if res is not None:
            return DichotomyResult("finite-orbit", orbit=res)
    return DichotomyResult("undecided", diagnostics=_diag(
        s, budgets, scanned, inter, contributors,
        reason="word budget exhausted without a verified certificate"))


def _empty_core_branch(s: GeneratingSet, budgets: Budgets, contributors,
                       scanned: int) -> DichotomyResult:
    tg = s.tg
    hs = [e for _, e, _ in contributors]
    hw = [w for w, _, _ in contributors]
    hr = [r for _, _, r in contributors]
    b_points = sorted({p for r in hr
                       for p in r.attracting_periodic + r.repelling_periodic},
                      key=lambda p: p.sort_key())
    # complete finite-orbit scan: an invariant measure would have an atom in
    # the hyperbolic point set (see module docstring)
    for xi in b_points:
        res = orbit(xi, s, budgets.orbit_size)
        if res is not None:
            return DichotomyResult("finite-orbit", orbit=res)
    witness = build_pingpong(s, budgets, context=(hs, hw, hr))
    if witness is not None:
        return DichotomyResult("ping-pong", witness=witness)
    return DichotomyResult("undecided", diagnostics=_diag(
        s, budgets, scanned, ClopenSet.empty(tg), contributors,
        reason="stable parts empty but neither branch verified in budget",
        candidates=b_points))


def _diag(s: GeneratingSet, budgets: Budgets, scanned: int, inter: ClopenSet,
          contributors, reason: str, candidates=()) -> dict:
    return {
        "reason": reason,
        "elements_scanned": scanned,
        "stable_intersection": inter.ball_strs(),
        "contributor_words": [word_str(w) for w, _, _ in contributors],
        "candidate_points": [str(p) for p in candidates],
        "budgets": {
            "word_length": budgets.word_length,
            "orbit_size": budgets.orbit_size,
            "expansion_depth": budgets.expansion_depth,
            "dovetail_steps": budgets.dovetail_steps,
            "closure_size": budgets.closure_size,
        },
    }
