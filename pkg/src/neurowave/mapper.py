"""Mapper graphs over labeled point clouds with density-based filtering.

Points are projected through a lens, covered by overlapping intervals per
lens axis, clustered within each cover cell (single linkage cut at a fixed
distance on min-max-normalized coordinates), and linked by shared points.
Nodes carry a kernel density score and a class-mix fraction; a mass
threshold keeps only the highest-density portion of the graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .errors import DataError, FormatError
from .recording import EpochSet
from .spectral import BAND_PRESETS_HZ, band_power, fft_magnitude

GRAPH_FORMAT_VERSION = 1

FAKE_RGB = (47, 84, 235)  # blue end of the class-mix scale
REAL_RGB = (128, 60, 170)  # purple end


@dataclass(frozen=True)
class PointCloud:
    """Labeled points; labels are "real"/"fake", one per row."""

    points: np.ndarray
    labels: tuple[str, ...]
    source: str = "eeg"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise DataError(f"points must be 2-D (n x dim), got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != pts.shape[0]:
            raise DataError(f"{len(self.labels)} labels for {pts.shape[0]} points")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MapperNode:
    node_id: int
    members: tuple[int, ...]
    density: float
    fake_fraction: float

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MapperGraph:
    """Clusters-as-nodes / shared-points-as-edges graph with provenance."""

    nodes: tuple[MapperNode, ...]
    edges: tuple[tuple[int, int], ...]
    lens_spec: dict
    cover_spec: dict
    cluster_spec: dict
    n_points: int

    def __post_init__(self):
        members = {n.node_id: set(n.members) for n in self.nodes}
        for a, b in self.edges:
            if a not in members or b not in members:
                raise DataError(f"edge ({a}, {b}) references a missing node")
            if not members[a] & members[b]:
                raise DataError(f"edge ({a}, {b}) endpoints share no members")
        for n in self.nodes:
            if not n.members:
                raise DataError(f"node {n.node_id} has no members")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def kde_density(points: np.ndarray) -> np.ndarray:
    """Gaussian kernel density at each point, Scott's-rule bandwidth.

    Coordinates are standardized per dimension before applying an
    isotropic kernel, so the bandwidth is scale-free.
    """
    points = np.asarray(points, dtype=np.float64)
    n, dim = points.shape
    if n == 0:
        return np.zeros(0)
    std = points.std(axis=0)
    std[std == 0] = 1.0
    scaled = points / std
    h = n ** (-1.0 / (dim + 4))
    norm = (2 * np.pi) ** (dim / 2) * h**dim * np.prod(std)
    sq_norms = np.sum(scaled**2, axis=1)
    out = np.empty(n)
    chunk = 1024
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        sq = sq_norms[lo:hi, np.newaxis] + sq_norms[np.newaxis, :] - 2.0 * scaled[lo:hi] @ scaled.T
        np.maximum(sq, 0.0, out=sq)
        out[lo:hi] = np.exp(-0.5 * sq / h**2).sum(axis=1)
    return out / (n * norm)


def lens(cloud: PointCloud, kind: str, axis: np.ndarray | None = None) -> np.ndarray:
    """Per-point lens values: (n, 2) for pca2, (n, 1) otherwise."""
    if cloud.n_points < 2:
        raise DataError("lens needs at least 2 points")
    if kind == "pca2":
        centered = cloud.points - cloud.points.mean(axis=0)
        if np.allclose(centered, 0.0):
            raise DataError("pca2 lens undefined for a zero-variance cloud")
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        projected = centered @ vt[:2].T
        if projected.shape[1] < 2:
            projected = np.column_stack([projected, np.zeros(cloud.n_points)])
        return projected
    if kind == "density":
        return kde_density(cloud.points)[:, np.newaxis]
    if kind == "custom-axis":
        if axis is None:
            raise DataError("custom-axis lens needs an axis vector")
        axis = np.asarray(axis, dtype=np.float64)
        if axis.shape != (cloud.dim,):
            raise DataError(f"axis shape {axis.shape} does not match cloud dim {cloud.dim}")
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise DataError("custom axis must be non-zero")
        return (cloud.points @ (axis / norm))[:, np.newaxis]
    raise DataError(f"unknown lens kind {kind!r}")


def _cover_intervals(values: np.ndarray, n_intervals: int, overlap: float) -> list[tuple[float, float]]:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return [(lo - 0.5, lo + 0.5)]
    length = (hi - lo) / (n_intervals - overlap * (n_intervals - 1))
    step = length * (1.0 - overlap)
    return [(lo + i * step, lo + i * step + length) for i in range(n_intervals)]


def _normalized(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span[span == 0] = 1.0
    return (points - lo) / span


def _single_linkage_clusters(coords: np.ndarray, eps: float) -> list[list[int]]:
    """Connected components of the <=eps pairwise-distance graph."""
    m = coords.shape[0]
    if m == 1:
        return [[0]]
    d2 = np.sum((coords[:, np.newaxis, :] - coords[np.newaxis, :, :]) ** 2, axis=-1)
    adjacency = d2 <= eps * eps
    unassigned = set(range(m))
    clusters = []
    while unassigned:
        seed = min(unassigned)
        stack = [seed]
        component = set()
        while stack:
            i = stack.pop()
            if i in component:
                continue
            component.add(i)
            stack.extend(j for j in np.flatnonzero(adjacency[i]) if j not in component)
        unassigned -= component
        clusters.append(sorted(component))
    clusters.sort(key=lambda c: c[0])
    return clusters


def build_mapper(
    cloud: PointCloud,
    lens_values: np.ndarray,
    intervals_per_axis: int,
    overlap: float,
    cluster_eps: float,
) -> MapperGraph:
    """Construct the mapper graph for a cloud under given lens values.

    The cover uses uniform overlapping intervals per lens axis (at most
    two axes). Clustering inside each cover cell merges points whose
    min-max-normalized distance is <= cluster_eps. Edges join nodes that
    share at least one point. An empty cloud yields an empty graph.
    """
    if intervals_per_axis < 1:
        raise DataError("intervals_per_axis must be >= 1")
    if not 0.0 <= overlap < 1.0:
        raise DataError(f"cover overlap must be in [0, 1), got {overlap}")
    if cluster_eps <= 0:
        raise DataError("cluster_eps must be > 0")

    lens_values = np.asarray(lens_values, dtype=np.float64)
    if lens_values.ndim == 1:
        lens_values = lens_values[:, np.newaxis]
    spec = {
        "intervals_per_axis": intervals_per_axis,
        "overlap": overlap,
        "cluster_eps": cluster_eps,
    }
    if cloud.n_points == 0:
        return MapperGraph(
            nodes=(),
            edges=(),
            lens_spec={"n_axes": int(lens_values.shape[1] if lens_values.size else 0)},
            cover_spec=spec,
            cluster_spec={"method": "single_linkage", "eps": cluster_eps},
            n_points=0,
        )
    if lens_values.shape[0] != cloud.n_points:
        raise DataError("lens values do not match the cloud size")
    if lens_values.shape[1] > 2:
        raise DataError("at most two lens axes are supported")

    normalized = _normalized(cloud.points)
    density = kde_density(cloud.points)
    axes_intervals = [
        _cover_intervals(lens_values[:, a], intervals_per_axis, overlap)
        for a in range(lens_values.shape[1])
    ]

    nodes: list[MapperNode] = []
    point_to_nodes: dict[int, list[int]] = {}
    for cell in product(*axes_intervals):
        mask = np.ones(cloud.n_points, dtype=bool)
        for a, (lo, hi) in enumerate(cell):
            mask &= (lens_values[:, a] >= lo) & (lens_values[:, a] <= hi)
        member_idx = np.flatnonzero(mask)
        if member_idx.size == 0:
            continue
        for local_members in _single_linkage_clusters(normalized[member_idx], cluster_eps):
            members = tuple(int(member_idx[i]) for i in local_members)
            node_id = len(nodes)
            nodes.append(
                MapperNode(
                    node_id=node_id,
                    members=members,
                    density=float(np.mean(density[list(members)])),
                    fake_fraction=float(
                        np.mean([cloud.labels[i] == "fake" for i in members])
                    ),
                )
            )
            for i in members:
                point_to_nodes.setdefault(i, []).append(node_id)

    edge_set = set()
    for node_list in point_to_nodes.values():
        for i, a in enumerate(node_list):
            for b in node_list[i + 1 :]:
                edge_set.add((min(a, b), max(a, b)))

    return MapperGraph(
        nodes=tuple(nodes),
        edges=tuple(sorted(edge_set)),
        lens_spec={"n_axes": lens_values.shape[1]},
        cover_spec=spec,
        cluster_spec={"method": "single_linkage", "eps": cluster_eps},
        n_points=cloud.n_points,
    )


def hdr_filter(graph: MapperGraph, mass_threshold: float) -> MapperGraph:
    """Keep the smallest set of highest-density nodes holding the mass threshold.

    Node mass is its member count over the summed member count of all
    nodes; nodes are taken in decreasing density order while the
    accumulated mass is below the threshold, so a threshold of 1 keeps
    everything and a threshold near 0 keeps only the densest node.
    """
    if not 0.0 < mass_threshold <= 1.0:
        raise DataError(f"mass_threshold must be in (0, 1], got {mass_threshold}")
    if not graph.nodes:
        return graph
    total = sum(n.size for n in graph.nodes)
    ranked = sorted(graph.nodes, key=lambda n: (-n.density, n.node_id))
    kept_ids = set()
    mass = 0.0
    for node in ranked:
        if mass >= mass_threshold * total - 1e-12:
            break
        kept_ids.add(node.node_id)
        mass += node.size
    kept_nodes = tuple(n for n in graph.nodes if n.node_id in kept_ids)
    kept_edges = tuple((a, b) for a, b in graph.edges if a in kept_ids and b in kept_ids)
    return replace(graph, nodes=kept_nodes, edges=kept_edges)


def separation_score(graph: MapperGraph, purity_threshold: float = 0.9) -> float:
    """Fraction of nodes whose class mix is at least the purity threshold."""
    if not graph.nodes:
        return 0.0
    pure = sum(
        1 for n in graph.nodes if max(n.fake_fraction, 1.0 - n.fake_fraction) >= purity_threshold
    )
    return pure / len(graph.nodes)


def class_mix_color(fake_fraction: float) -> tuple[int, int, int]:
    """Blue (pure fake) to purple (pure real) interpolation."""
    f = float(np.clip(fake_fraction, 0.0, 1.0))
    return tuple(int(round(f * b + (1 - f) * r)) for b, r in zip(FAKE_RGB, REAL_RGB))


def node_color_hex(node: MapperNode, max_density: float) -> str:
    """Class-mix hue darkened with relative density (darker = denser)."""
    rgb = class_mix_color(node.fake_fraction)
    dnorm = node.density / max_density if max_density > 0 else 0.0
    shade = 1.0 - 0.45 * dnorm
    r, g, b = (int(round(c * shade)) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def export_graph(graph: MapperGraph, fmt: str) -> bytes:
    """Serialize to graphviz dot text or the versioned structured-text schema."""
    if fmt == "dot":
        max_density = max((n.density for n in graph.nodes), default=0.0)
        lines = ["graph mapper {", "  node [style=filled shape=circle];"]
        for n in graph.nodes:
            width = 0.3 + 0.2 * np.sqrt(n.size)
            lines.append(
                f'  n{n.node_id} [label="{n.node_id}:{n.size}" fillcolor="{node_color_hex(n, max_density)}" '
                f'width={width:.2f} fake_fraction={n.fake_fraction:.3f} density={n.density:.6g}];'
            )
        for a, b in graph.edges:
            lines.append(f"  n{a} -- n{b};")
        lines.append("}")
        return ("\n".join(lines) + "\n").encode()
    if fmt in ("structured-text", "json"):
        payload = {
            "format_version": GRAPH_FORMAT_VERSION,
            "kind": "mapper_graph",
            "n_points": graph.n_points,
            "nodes": [
                {
                    "id": n.node_id,
                    "members": list(n.members),
                    "density": n.density,
                    "fake_fraction": n.fake_fraction,
                }
                for n in graph.nodes
            ],
            "edges": [list(e) for e in graph.edges],
            "lens_spec": graph.lens_spec,
            "cover_spec": graph.cover_spec,
            "cluster_spec": graph.cluster_spec,
        }
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()
    raise DataError(f"unknown export format {fmt!r}")


def import_graph(blob: bytes) -> MapperGraph:
    """Inverse of the structured-text export."""
    try:
        payload = json.loads(blob.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"not a mapper graph document: {exc}") from exc
    if payload.get("kind") != "mapper_graph":
        raise FormatError("document kind is not mapper_graph")
    if payload.get("format_version") != GRAPH_FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {payload.get('format_version')!r}")
    nodes = tuple(
        MapperNode(
            node_id=int(n["id"]),
            members=tuple(int(i) for i in n["members"]),
            density=float(n["density"]),
            fake_fraction=float(n["fake_fraction"]),
        )
        for n in payload["nodes"]
    )
    edges = tuple((int(a), int(b)) for a, b in payload["edges"])
    return MapperGraph(
        nodes=nodes,
        edges=edges,
        lens_spec=payload["lens_spec"],
        cover_spec=payload["cover_spec"],
        cluster_spec=payload["cluster_spec"],
        n_points=int(payload["n_points"]),
    )


def cloud_from_epochs(epoch_set: EpochSet, source: str = "eeg") -> PointCloud:
    """Band-power feature cloud (one point per labeled epoch)."""
    if not len(epoch_set):
        raise DataError("cannot build a point cloud from an empty epoch set")
    rows = []
    labels = []
    for epoch in epoch_set:
        if epoch.label is None:
            raise DataError("point cloud needs labeled epochs")
        spec = fft_magnitude(epoch, epoch_set.sample_rate_hz)
        nyquist = (spec.n_bins - 1) * spec.bin_hz
        feats = [
            np.log1p(band_power(spec, low, min(high, nyquist)).mean())
            for low, high in BAND_PRESETS_HZ.values()
        ]
        rows.append(feats)
        labels.append(epoch.label)
    return PointCloud(points=np.asarray(rows), labels=tuple(labels), source=source)
