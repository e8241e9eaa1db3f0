"""TSP and ESPDP instances, their route costs and instance documents.

A route is a permutation of the stops ``1..n``; the depot ``0`` is implicitly
visited first and last. Both instance classes expose the same three methods
used by the solvers:

- ``cost(route)`` for a single route,
- ``batch_cost(perms)`` for a ``(count, n)`` array of routes,
- ``batch_swap_cost(perms, k, energies)`` for the cost of every row after
  swapping positions ``k[r]`` and ``k[r] + 1``, given the current costs.

ESPDP segment costs depend on the load still aboard. Segment ``k`` joins the
``k``-th and ``(k+1)``-th visited stops, and the load on it is the vehicle
weight plus the parcels of every stop not yet visited.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InstanceError

EUCLID_RTOL = 1e-12


def _as_route(inst, r: Sequence[int]) -> list[int]:
    route = [int(x) for x in r]
    if len(route) != inst.n:
        raise ValueError(f"route has length {len(route)} but the instance has n={inst.n}")
    return route


def _check_square(name: str, m: np.ndarray, size: int) -> None:
    if m.shape != (size, size):
        raise InstanceError(f"{name} must be {size}x{size}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InstanceError(f"{name} has non-finite entries")
    if np.any(m < 0):
        raise InstanceError(f"{name} has negative entries")
    if np.any(np.diag(m) != 0):
        raise InstanceError(f"{name} must have a zero diagonal")


def _euclidean(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


@dataclass(frozen=True, eq=False)
class TspInstance:
    distance: np.ndarray
    coordinates: np.ndarray | None = None
    seed: int | None = None
    _load_model: tuple = field(init=False, repr=False)

    kind = "tsp"

    def __post_init__(self):
        d = np.array(self.distance, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 2:
            raise InstanceError("distance must be an (n+1)x(n+1) matrix with n >= 1")
        _check_square("distance", d, d.shape[0])
        if not np.array_equal(d, d.T):
            raise InstanceError("distance must be symmetric")
        object.__setattr__(self, "distance", d)
        size = d.shape[0]
        object.__setattr__(self, "_load_model", (1.0, np.zeros(size), d, np.zeros((size, size))))
        if self.coordinates is not None:
            pts = np.array(self.coordinates, dtype=np.float64)
            if pts.shape != (d.shape[0], 2):
                raise InstanceError(f"coordinates must have shape ({d.shape[0]}, 2)")
            if not np.allclose(d, _euclidean(pts), rtol=EUCLID_RTOL, atol=0.0):
                raise InstanceError("distance does not match the Euclidean distances of coordinates")
            object.__setattr__(self, "coordinates", pts)

    @property
    def n(self) -> int:
        return self.distance.shape[0] - 1

    def cost(self, r: Sequence[int]) -> float:
        route = _as_route(self, r)
        path = [0, *route, 0]
        return float(sum(self.distance[a, b] for a, b in zip(path[:-1], path[1:])))

    def batch_cost(self, perms: np.ndarray) -> np.ndarray:
        depot = np.zeros((perms.shape[0], 1), dtype=perms.dtype)
        path = np.hstack([depot, perms, depot])
        return self.distance[path[:, :-1], path[:, 1:]].sum(axis=1)

    def batch_swap_cost(self, perms: np.ndarray, k: np.ndarray, energies: np.ndarray) -> np.ndarray:
        return _swap_cost(perms, k, energies, *self.load_model())

    def load_model(self):
        """This TSP as ``(full_load, node_weights, coeff, additive)``: unit load, no parcels."""
        return self._load_model


@dataclass(frozen=True, eq=False)
class EspdpInstance:
    vehicle_weight: float
    parcel_weights: np.ndarray
    coeff: np.ndarray
    resistance: np.ndarray
    coordinates: np.ndarray | None = None
    seed: int | None = None
    # parcel weight per node, with 0 at the depot
    _node_weights: np.ndarray = field(init=False, repr=False)
    _full_load: float = field(init=False, repr=False)

    kind = "espdp"

    def __post_init__(self):
        w = np.array(self.parcel_weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise InstanceError("parcel_weights must be a non-empty list")
        size = w.size + 1
        c = np.array(self.coeff, dtype=np.float64)
        rho = np.array(self.resistance, dtype=np.float64)
        _check_square("coeff", c, size)
        _check_square("resistance", rho, size)
        vw = float(self.vehicle_weight)
        if not (np.isfinite(vw) and vw > 0):
            raise InstanceError(f"vehicle_weight must be positive, got {vw}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InstanceError("parcel_weights must be finite and non-negative")
        object.__setattr__(self, "vehicle_weight", vw)
        object.__setattr__(self, "parcel_weights", w)
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "resistance", rho)
        object.__setattr__(self, "_node_weights", np.concatenate([[0.0], w]))
        object.__setattr__(self, "_full_load", vw + float(w.sum()))
        if self.coordinates is not None:
            pts = np.array(self.coordinates, dtype=np.float64)
            if pts.shape != (size, 2):
                raise InstanceError(f"coordinates must have shape ({size}, 2)")
            object.__setattr__(self, "coordinates", pts)

    @property
    def n(self) -> int:
        return self.parcel_weights.size

    def cost(self, r: Sequence[int]) -> float:
        route = _as_route(self, r)
        path = [0, *route, 0]
        load = self._full_load
        total = 0.0
        for a, b in zip(path[:-1], path[1:]):
            # parcel for `a` is already off the vehicle when it leaves `a`
            load -= self._node_weights[a]
            total += load * self.coeff[a, b] + self.resistance[a, b]
        return float(total)

    def batch_cost(self, perms: np.ndarray) -> np.ndarray:
        depot = np.zeros((perms.shape[0], 1), dtype=perms.dtype)
        path = np.hstack([depot, perms, depot])
        delivered = np.cumsum(self._node_weights[path[:, :-1]], axis=1)
        loads = self._full_load - delivered
        seg = path[:, :-1], path[:, 1:]
        return (loads * self.coeff[seg] + self.resistance[seg]).sum(axis=1)

    def batch_swap_cost(self, perms: np.ndarray, k: np.ndarray, energies: np.ndarray) -> np.ndarray:
        return _swap_cost(perms, k, energies, *self.load_model())

    def load_model(self):
        """``(full_load, node_weights, coeff, resistance)`` as used by the compiled kernels."""
        return self._full_load, self._node_weights, self.coeff, self.resistance


def _swap_cost(perms, k, energies, full_load, w, c, rho):
    """Vectorised cost after swapping positions ``k, k+1`` of each row.

    Only the three segments around the pair change. The loads on the segments
    into and out of the pair are unchanged; the load between them swaps the
    parcel of the second stop for that of the first.
    """
    rows = np.arange(perms.shape[0])
    prev, a, b, nxt = _swap_context(perms, k)
    # load on the segment leaving b (the later of the pair), before the swap
    delivered = np.cumsum(w[perms], axis=1)[rows, k + 1]
    tail = full_load - delivered
    wa, wb = w[a], w[b]
    head = tail + wa + wb
    old = (head * c[prev, a] + rho[prev, a]
           + (tail + wb) * c[a, b] + rho[a, b]
           + tail * c[b, nxt] + rho[b, nxt])
    new = (head * c[prev, b] + rho[prev, b]
           + (tail + wa) * c[b, a] + rho[b, a]
           + tail * c[a, nxt] + rho[a, nxt])
    return energies + (new - old)


def _swap_context(perms: np.ndarray, k: np.ndarray):
    """Return (prev, a, b, next) node labels around each swapped pair."""
    rows = np.arange(perms.shape[0])
    n = perms.shape[1]
    a = perms[rows, k]
    b = perms[rows, k + 1]
    prev = np.where(k > 0, perms[rows, np.maximum(k - 1, 0)], 0)
    nxt = np.where(k + 2 < n, perms[rows, np.minimum(k + 2, n - 1)], 0)
    return prev, a, b, nxt


def tsp_cost(inst: TspInstance, r: Sequence[int]) -> float:
    return inst.cost(r)


def espdp_cost(inst: EspdpInstance, r: Sequence[int]) -> float:
    return inst.cost(r)


def espdp_delta_cost(inst: EspdpInstance, r: Sequence[int], k: int, cached_cost: float) -> float:
    """Cost of ``r`` with positions ``k, k+1`` swapped, from the cached cost of ``r``.

    Only the three segments around the swapped pair are re-evaluated.
    ``cached_cost`` is trusted; a stale value gives a wrong answer.
    """
    route = _as_route(inst, r)
    if not 0 <= k <= inst.n - 2:
        raise IndexError(f"move position {k} out of range for n={inst.n}")
    perms = np.array([route], dtype=np.int64)
    out = inst.batch_swap_cost(perms, np.array([k]), np.array([cached_cost], dtype=np.float64))
    return float(out[0])


# -- generation ---------------------------------------------------------------

@dataclass(frozen=True)
class EspdpParams:
    """Generator settings.

    Stops and depot are uniform in the unit square. Energy coefficients are
    ``coeff_scale * distance`` and air resistance ``resistance_scale *
    vehicle_weight * distance``. Parcel weights are uniform in
    ``[weight_low, weight_high] * vehicle_weight / n``.
    """

    vehicle_weight: float = 10.0
    coeff_scale: float = 1.0
    resistance_scale: float = 0.1
    weight_low: float = 0.1
    weight_high: float = 1.0

    def __post_init__(self):
        if self.vehicle_weight <= 0:
            raise ValueError("vehicle_weight must be positive")
        if self.coeff_scale < 0 or self.resistance_scale < 0:
            raise ValueError("cost scales must be non-negative")
        if not 0 < self.weight_low <= self.weight_high:
            raise ValueError("need 0 < weight_low <= weight_high")


def generate_espdp(n: int, rng: np.random.Generator, params: EspdpParams = EspdpParams(),
                   seed: int | None = None) -> EspdpInstance:
    if n < 1:
        raise ValueError(f"need at least one stop, got n={n}")
    points = rng.random((n + 1, 2))
    d = _euclidean(points)
    wv = params.vehicle_weight
    weights = rng.uniform(params.weight_low, params.weight_high, size=n) * wv / n
    return EspdpInstance(
        vehicle_weight=wv,
        parcel_weights=weights,
        coeff=params.coeff_scale * d,
        resistance=params.resistance_scale * wv * d,
        coordinates=points,
        seed=seed,
    )


def generate_tsp(n: int, rng: np.random.Generator, seed: int | None = None) -> TspInstance:
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    points = rng.random((n + 1, 2))
    return TspInstance(distance=_euclidean(points), coordinates=points, seed=seed)


# -- instance documents -------------------------------------------------------

def _matrix(m: np.ndarray) -> list[list[float]]:
    return [[float(x) for x in row] for row in m]


def instance_to_document(inst) -> dict:
    if isinstance(inst, EspdpInstance):
        doc = {
            "kind": "espdp",
            "n": inst.n,
            "vehicle_weight": inst.vehicle_weight,
            "parcel_weights": [float(x) for x in inst.parcel_weights],
            "coeff": _matrix(inst.coeff),
            "resistance": _matrix(inst.resistance),
        }
    elif isinstance(inst, TspInstance):
        doc = {"kind": "tsp", "n": inst.n, "distance": _matrix(inst.distance)}
    else:
        raise TypeError(f"not an instance: {type(inst).__name__}")
    if inst.coordinates is not None:
        doc["coordinates"] = _matrix(inst.coordinates)
    if inst.seed is not None:
        doc["seed"] = int(inst.seed)
    return doc


def _require(doc: dict, name: str):
    if name not in doc:
        raise InstanceError(f"instance document is missing field '{name}'")
    return doc[name]


def instance_from_document(doc: dict):
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    kind = _require(doc, "kind")
    n = _require(doc, "n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceError(f"field 'n' must be a positive integer, got {n!r}")
    try:
        if kind == "espdp":
            inst = EspdpInstance(
                vehicle_weight=_require(doc, "vehicle_weight"),
                parcel_weights=_require(doc, "parcel_weights"),
                coeff=_require(doc, "coeff"),
                resistance=_require(doc, "resistance"),
                coordinates=doc.get("coordinates"),
                seed=doc.get("seed"),
            )
        elif kind == "tsp":
            inst = TspInstance(
                distance=_require(doc, "distance"),
                coordinates=doc.get("coordinates"),
                seed=doc.get("seed"),
            )
        else:
            raise InstanceError(f"unknown instance kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"malformed instance document: {exc}") from exc
    if inst.n != n:
        raise InstanceError(f"field 'n' is {n} but the matrices describe n={inst.n}")
    return inst


def serialize_instance(inst) -> bytes:
    return (json.dumps(instance_to_document(inst), indent=1) + "\n").encode()


def deserialize_instance(data: bytes | str):
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance document is not valid JSON: {exc}") from exc
    return instance_from_document(doc)
