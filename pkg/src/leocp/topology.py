"""Time-indexed satellite-ground graph construction and shortest paths.

A snapshot at time ``t`` holds satellite/station ECEF positions, the
+Grid inter-satellite links weighted by Euclidean distance, and one
ground-satellite link per mutually visible pair. Shortest-path
distances from every station to every satellite become a
``DistanceField``; unreachable pairs are flagged rather than raised.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import LIGHT_SPEED_KM_MS
from .orbits import WalkerShell, pack_elements, propagate_all, station_positions

DEFAULT_MIN_ELEVATION_DEG = 25.0


@dataclass(frozen=True)
class TopologySnapshot:
    """Graph of the constellation at one instant.

    Edge arrays hold each undirected pair exactly once. Satellite
    indices are flat (plane * sats_per_plane + slot); station indices
    follow the ground-station list order.
    """

    t: float
    sat_positions: np.ndarray  # (n_sats, 3) km
    station_positions: np.ndarray  # (n_stations, 3) km
    isl_pairs: np.ndarray  # (n_isl, 2) int
    isl_km: np.ndarray  # (n_isl,)
    gsl_pairs: np.ndarray  # (n_gsl, 2) int: (sat, station)
    gsl_km: np.ndarray  # (n_gsl,)

    @property
    def n_sats(self) -> int:
        return self.sat_positions.shape[0]

    @property
    def n_stations(self) -> int:
        return self.station_positions.shape[0]


@dataclass(frozen=True)
class DistanceField:
    """Shortest-path length from every satellite to every station at ``t``."""

    t: float
    d: np.ndarray  # (n_sats, n_stations) km, inf where unreachable
    reachable: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.reachable is None:
            object.__setattr__(self, "reachable", np.isfinite(self.d))


def build_isl_grid(shell: WalkerShell) -> list[tuple[int, int]]:
    """+Grid pairing over flat satellite indices.

    Each satellite links to slot +-1 in its own plane (wrapping) and to
    the same slot in plane +-1. Plane adjacency wraps for delta
    patterns (360 degree RAAN span) but not across the seam of a star
    pattern (180 degrees). Degenerate shells with fewer than three
    planes or slots simply omit the impossible links.
    """
    planes, slots = shell.planes, shell.sats_per_plane
    idx = lambda p, s: p * slots + s
    pairs = []
    # intra-plane ring
    if slots > 2:
        for p in range(planes):
            for s in range(slots):
                pairs.append((idx(p, s), idx(p, (s + 1) % slots)))
    elif slots == 2:
        for p in range(planes):
            pairs.append((idx(p, 0), idx(p, 1)))
    # inter-plane, same slot index
    wrap = shell.raan_span_deg >= 360.0
    if planes > 2:
        last = planes if wrap else planes - 1
        for p in range(last):
            for s in range(slots):
                pairs.append((idx(p, s), idx((p + 1) % planes, s)))
    elif planes == 2:
        for s in range(slots):
            pairs.append((idx(0, s), idx(1, s)))
    return pairs


def visible(sat_pos: np.ndarray, gs_pos: np.ndarray, min_elevation_deg: float) -> bool:
    """True iff the satellite sits above the station's local horizon mask."""
    los = sat_pos - gs_pos
    rng = np.linalg.norm(los)
    if rng == 0.0:
        return True
    sin_elev = float(np.dot(gs_pos, los)) / (float(np.linalg.norm(gs_pos)) * rng)
    # tolerance keeps the exact-overhead case visible at a 90 degree mask
    return bool(sin_elev >= math.sin(math.radians(min_elevation_deg)) - 1e-12)


def _visibility_matrix(sat_pos, gs_pos, min_elevation_deg):
    """Boolean (n_sats, n_stations) visibility and the range matrix."""
    diff = sat_pos[:, None, :] - gs_pos[None, :, :]  # (N, M, 3)
    rng = np.linalg.norm(diff, axis=2)
    gs_norm = np.linalg.norm(gs_pos, axis=1)
    radial = np.einsum("nmk,mk->nm", diff, gs_pos)
    with np.errstate(invalid="ignore", divide="ignore"):
        sin_elev = radial / (rng * gs_norm[None, :])
    vis = sin_elev >= math.sin(math.radians(min_elevation_deg)) - 1e-12
    vis &= rng > 0.0
    return vis, rng


def _nearest_interplane_pairs(shell, sat_pos):
    """Per-snapshot variant: link each satellite to its nearest satellite
    in each neighboring plane instead of the fixed same-slot index."""
    planes, slots = shell.planes, shell.sats_per_plane
    wrap = shell.raan_span_deg >= 360.0
    pairs = set()
    pos = sat_pos.reshape(planes, slots, 3)
    neighbor_planes = []
    if planes == 2:
        neighbor_planes = [(0, 1)]
    elif planes > 2:
        last = planes if wrap else planes - 1
        neighbor_planes = [(p, (p + 1) % planes) for p in range(last)]
    for p, q in neighbor_planes:
        diff = pos[p][:, None, :] - pos[q][None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        nearest = np.argmin(dist, axis=1)
        for s in range(slots):
            pairs.add((p * slots + s, q * slots + int(nearest[s])))
    return sorted(pairs)


def build_snapshot(
    shell: WalkerShell,
    elements,
    stations,
    t: float,
    min_elevation_deg: float = DEFAULT_MIN_ELEVATION_DEG,
    isl_mode: str = "fixed_grid",
    gsl_limit: int | None = None,
) -> TopologySnapshot:
    """Positions plus ISL/GSL edge lists at time ``t``.

    ``isl_mode`` is "fixed_grid" (index-based pairing, stable over
    time) or "nearest" (recompute the inter-plane neighbor each
    snapshot). ``gsl_limit`` caps links per satellite to the nearest
    visible stations; default unlimited.
    """
    arrs = pack_elements(elements)
    sat_pos = propagate_all(arrs, t)
    gs_pos = station_positions(stations) if isinstance(stations, list) else stations

    if isl_mode == "fixed_grid":
        pairs = build_isl_grid(shell)
    elif isl_mode == "nearest":
        pairs = []
        if shell.sats_per_plane > 2:
            slots = shell.sats_per_plane
            for p in range(shell.planes):
                for s in range(slots):
                    pairs.append((p * slots + s, p * slots + (s + 1) % slots))
        elif shell.sats_per_plane == 2:
            for p in range(shell.planes):
                pairs.append((p * 2, p * 2 + 1))
        pairs += _nearest_interplane_pairs(shell, sat_pos)
    else:
        raise ValueError(f"unknown isl_mode: {isl_mode!r}")

    isl_pairs = np.array(pairs, dtype=np.int64).reshape(len(pairs), 2)
    isl_km = np.linalg.norm(sat_pos[isl_pairs[:, 0]] - sat_pos[isl_pairs[:, 1]], axis=1)

    vis, rng = _visibility_matrix(sat_pos, gs_pos, min_elevation_deg)
    if gsl_limit is not None:
        order = np.argsort(rng, axis=1, kind="stable")
        keep = np.zeros_like(vis)
        for s in range(vis.shape[0]):
            kept = 0
            for g in order[s]:
                if vis[s, g]:
                    keep[s, g] = True
                    kept += 1
                    if kept >= gsl_limit:
                        break
        vis = keep
    sat_idx, gs_idx = np.nonzero(vis)
    gsl_pairs = np.stack([sat_idx, gs_idx], axis=1) if sat_idx.size else np.empty((0, 2), dtype=np.int64)
    gsl_km = rng[sat_idx, gs_idx] if sat_idx.size else np.empty(0)

    return TopologySnapshot(
        t=t,
        sat_positions=sat_pos,
        station_positions=gs_pos,
        isl_pairs=isl_pairs,
        isl_km=isl_km,
        gsl_pairs=gsl_pairs.astype(np.int64),
        gsl_km=gsl_km,
    )


def _to_csr(snapshot: TopologySnapshot):
    """Symmetric CSR adjacency over nodes [sats..., stations...]."""
    n = snapshot.n_sats + snapshot.n_stations
    src = np.concatenate(
        [
            snapshot.isl_pairs[:, 0],
            snapshot.isl_pairs[:, 1],
            snapshot.gsl_pairs[:, 0],
            snapshot.gsl_pairs[:, 1] + snapshot.n_sats,
        ]
    )
    dst = np.concatenate(
        [
            snapshot.isl_pairs[:, 1],
            snapshot.isl_pairs[:, 0],
            snapshot.gsl_pairs[:, 1] + snapshot.n_sats,
            snapshot.gsl_pairs[:, 0],
        ]
    )
    w = np.concatenate([snapshot.isl_km, snapshot.isl_km, snapshot.gsl_km, snapshot.gsl_km])
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, dst.astype(np.int64), w.astype(np.float64), n


def shortest_distances(snapshot: TopologySnapshot, impl: str | None = None) -> DistanceField:
    """Dijkstra from every ground station over the ISL+GSL union graph."""
    n_sats, n_stations = snapshot.n_sats, snapshot.n_stations
    if snapshot.isl_km.size + snapshot.gsl_km.size == 0:
        d = np.full((n_sats, n_stations), np.inf)
        return DistanceField(t=snapshot.t, d=d)
    indptr, indices, weights, n = _to_csr(snapshot)
    sources = np.arange(n_sats, n_sats + n_stations)
    dist = kernels.dijkstra_from_sources(indptr, indices, weights, n, sources, impl=impl)
    d = dist[:, :n_sats].T.copy()  # (n_sats, n_stations)
    return DistanceField(t=snapshot.t, d=d)


def distance_to_latency(km) -> float:
    """One-way propagation delay in milliseconds for a path length in km."""
    return km / LIGHT_SPEED_KM_MS


# ---------------------------------------------------------------------------
# serialization


def snapshot_to_dict(snapshot: TopologySnapshot) -> dict:
    return {
        "t": snapshot.t,
        "sat_positions": snapshot.sat_positions.tolist(),
        "station_positions": snapshot.station_positions.tolist(),
        "isl_edges": [
            [int(a), int(b), float(w)]
            for (a, b), w in zip(snapshot.isl_pairs.tolist(), snapshot.isl_km.tolist())
        ],
        "gsl_edges": [
            [int(s), int(g), float(w)]
            for (s, g), w in zip(snapshot.gsl_pairs.tolist(), snapshot.gsl_km.tolist())
        ],
    }


def field_to_dict(f: DistanceField) -> dict:
    d = np.where(f.reachable, f.d, -1.0)
    return {
        "t": f.t,
        "d_km": d.tolist(),
        "reachable": f.reachable.astype(int).tolist(),
    }


def write_fields_csv(fields, path):
    """One row per (t, sat, station, km); unreachable pairs get km=-1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "sat", "station", "km"])
        for f in fields:
            for s in range(f.d.shape[0]):
                for g in range(f.d.shape[1]):
                    km = f.d[s, g] if f.reachable[s, g] else -1.0
                    writer.writerow([f.t, s, g, f"{km:.6f}"])


def write_snapshots_json(snapshots, path):
    with open(path, "w") as fh:
        json.dump([snapshot_to_dict(s) for s in snapshots], fh)
        fh.write("\n")
