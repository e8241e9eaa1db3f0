import itertools
import pathlib

import numpy as np
import pytest

from permqio.problems import EspdpInstance, TspInstance, deserialize_instance

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def load_fixture(name):
    return deserialize_instance((FIXTURES / name).read_bytes())


def naive_espdp_cost(inst, route):
    """Straight transcription of the load-weighted segment sum, no shared code."""
    stops = [0, *route, 0]
    n = len(route)
    total = 0.0
    for k in range(n + 1):
        load = inst.vehicle_weight
        for j in range(k + 1, n + 1):
            load += inst.parcel_weights[stops[j] - 1]
        a, b = stops[k], stops[k + 1]
        total += load * inst.coeff[a][b] + inst.resistance[a][b]
    return total


def all_routes(n):
    return list(itertools.permutations(range(1, n + 1)))


def equilateral_tsp():
    """Depot and two stops on a unit equilateral triangle."""
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    return TspInstance(distance=d, coordinates=pts)


def flat_tsp(n):
    d = np.ones((n + 1, n + 1)) - np.eye(n + 1)
    return TspInstance(distance=d)


def small_espdp():
    return EspdpInstance(
        vehicle_weight=1.0,
        parcel_weights=[1.0, 3.0],
        coeff=[[0, 1, 2], [1, 0, 3], [2, 3, 0]],
        resistance=[[0, 0.1, 0.2], [0.1, 0, 0.3], [0.2, 0.3, 0]],
    )


@pytest.fixture
def espdp6():
    return load_fixture("espdp_n6.json")
