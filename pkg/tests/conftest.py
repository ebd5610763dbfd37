import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vesselseg.graph import VesselGraph  # noqa: E402
from vesselseg.synthesis import RadiusParams, ScaParams, synthesize  # noqa: E402


@pytest.fixture(scope="session")
def tree_5k():
    return synthesize(ScaParams(target_nodes=5000, seed=11), RadiusParams())


@pytest.fixture(scope="session")
def tree_1k():
    return synthesize(ScaParams(target_nodes=1000, seed=5), RadiusParams())


def chain(radii, xs=None):
    """Path graph 0-1-2-... along x with the given radii."""
    n = len(radii)
    xs = np.arange(n, dtype=float) if xs is None else np.asarray(xs, float)
    xyz = np.stack([xs, np.zeros(n), np.zeros(n)], axis=1)
    parent = [-1] + list(range(n - 1))
    return VesselGraph(np.arange(n), xyz, radii, parent, root=0)


def random_graph(rng, max_nodes=500):
    """Random ids, radii and undirected-ish connectivity (extra edges only)."""
    n = int(rng.integers(1, max_nodes + 1))
    ids = rng.choice(10 * n, size=n, replace=False)
    radii = rng.choice([0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0], size=n) * rng.uniform(0.9, 1.1)
    if rng.random() < 0.3:
        radii = np.round(radii)  # force ties
        radii[radii == 0] = 1.0
    m = int(rng.integers(0, 2 * n + 1))
    e = ids[rng.integers(0, n, size=(m, 2))]
    e = e[e[:, 0] != e[:, 1]]
    xyz = rng.random((n, 3))
    return VesselGraph(ids, xyz, radii, extra_edges=e)
