import itertools
import math

import numpy as np
import pytest

from fldmot import fld


def brute_force_assignment(costs):
    """Exhaustive minimum over all injective row-to-column mappings of size
    min(m, n); ties broken by lexicographically smallest pair list."""
    cm = np.asarray(costs, dtype=np.float64)
    m, n = cm.shape
    k = min(m, n)
    best = None
    for rows in itertools.combinations(range(m), k):
        for cols in itertools.permutations(range(n), k):
            pairs = sorted(zip(rows, cols))
            total = math.fsum(cm[r, c] for r, c in pairs)
            if (
                best is None
                or total < best[0] - 1e-12
                or (abs(total - best[0]) <= 1e-12 and pairs < best[1])
            ):
                best = (total, pairs)
    return best


def make_cluster_queues(n_classes, dim, depth, rng, sep=1.0, noise=0.3):
    """Feature queues drawn around per-class prototypes; ages run 1..depth."""
    protos = rng.normal(size=(n_classes, dim)) * sep
    queues = []
    for c in range(n_classes):
        entries = [
            (age, protos[c] + noise * rng.normal(size=dim))
            for age in range(1, depth + 1)
        ]
        queues.append(fld.FeatureQueue(identity=c + 1, entries=entries, capacity=depth))
    return queues


@pytest.fixture
def rng():
    return np.random.default_rng(0)
