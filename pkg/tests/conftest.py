import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vtrees import (
    GeneratingSet,
    TypeGraph,
    builtin_generators,
    random_element,
)

BINARY_SPEC = '{"types": {"b": ["b", "b"]}, "root": "b"}'
WIDE_SPEC = '{"types": {"r": ["b", "b", "b"], "b": ["b", "b"]}, "root": "r"}'
RAY_SPEC = '{"types": {"a": ["a", "b"], "b": ["b"]}, "root": "a"}'


@pytest.fixture(scope="session")
def binary():
    """The uniform binary tree: the boundary is the Cantor set of bit ends."""
    return TypeGraph({"b": ["b", "b"]}, "b")


@pytest.fixture(scope="session")
def wide():
    """Three children at the root, two everywhere else."""
    return TypeGraph({"r": ["b", "b", "b"], "b": ["b", "b"]}, "r")


@pytest.fixture(scope="session")
def ray():
    """A tree with isolated boundary points (type b unrolls to a ray)."""
    return TypeGraph({"a": ["a", "b"], "b": ["b"]}, "a")


@pytest.fixture(scope="session")
def gens(binary):
    return builtin_generators(binary)


@pytest.fixture(scope="session")
def x0(gens):
    return gens["x0"]


@pytest.fixture(scope="session")
def x1(gens):
    return gens["x1"]


@pytest.fixture(scope="session")
def sigma(gens):
    return gens["sigma"]


@pytest.fixture(scope="session")
def tau(gens):
    return gens["tau"]


@pytest.fixture(scope="session")
def v_gens(gens):
    return GeneratingSet([gens[n] for n in ("x0", "x1", "sigma", "tau")],
                         ["x0", "x1", "sigma", "tau"])


def sample_elements(tg, count, size, seed_base=0):
    return [random_element(tg, size, random.Random(seed_base + i))
            for i in range(count)]


def random_point(tg, rng, max_prefix=6, max_cycle=3):
    """A random eventually periodic end (wide tree: cycles stay below the
    root so any bit string is a valid cycle)."""
    from vtrees import boundary_point
    depth = rng.randint(1 if tg.arity(tg.root_type) != 2 else 0, max_prefix)
    prefix = []
    t = tg.root_type
    for _ in range(depth):
        i = rng.randrange(tg.arity(t))
        prefix.append(i)
        t = tg.children[t][i]
    cycle_len = rng.randint(1, max_cycle)
    cycle = [rng.randrange(2) for _ in range(cycle_len)]
    return boundary_point(tg, prefix, cycle)
