"""Shared fixtures and independent oracle implementations.

The oracles here deliberately use naive loops and direct arithmetic so
they stay independent of the library code paths they check.
"""

from __future__ import annotations

import numpy as np

from neurowave.recording import Interval, LabelTrack, Recording


def make_recording(data, rate=256.0, start=0.0, names=None):
    data = np.asarray(data, dtype=float)
    if names is None:
        names = [f"C{i}" for i in range(data.shape[0])]
    return Recording(data=data, sample_rate_hz=rate, channel_names=tuple(names), start_time_s=start)


def make_track(*intervals):
    return LabelTrack(intervals=tuple(Interval(*iv) for iv in intervals))


def measure_tone_amplitude(x, rate, freq, skip_s=1.0):
    """Oracle: amplitude of a sinusoid via projection onto the analytic tone."""
    n = len(x)
    skip = int(skip_s * rate)
    core = x[skip : n - skip]
    t = np.arange(skip, n - skip) / rate
    c = np.cos(2 * np.pi * freq * t)
    s = np.sin(2 * np.pi * freq * t)
    return 2.0 * np.hypot(np.dot(core, c), np.dot(core, s)) / len(core)


def brute_force_epoch_labels(track, origins, window_s):
    """Oracle: per-epoch tag overlaps via direct interval arithmetic.

    Returns a list of either None (dropped: silence/baseline overlap) or
    the majority label with ties going to fake; raises on uncovered spans.
    """
    out = []
    for t0 in origins:
        t1 = t0 + window_s
        by_tag = {"real": 0.0, "fake": 0.0, "silence": 0.0, "baseline": 0.0}
        for iv in track.intervals:
            lo = max(iv.start_s, t0)
            hi = min(iv.end_s, t1)
            if hi > lo:
                by_tag[iv.tag] += hi - lo
        if sum(by_tag.values()) < window_s - 1e-9:
            raise AssertionError(f"oracle: epoch [{t0}, {t1}) not covered")
        if by_tag["silence"] > 0 or by_tag["baseline"] > 0:
            out.append(None)
        elif by_tag["real"] > by_tag["fake"]:
            out.append("real")
        else:
            out.append("fake")
    return out


def brute_force_kde(points):
    """Oracle: naive double-loop Gaussian KDE with Scott's-rule bandwidth."""
    points = np.asarray(points, dtype=float)
    n, dim = points.shape
    std = points.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    scaled = points / std
    h = n ** (-1.0 / (dim + 4))
    norm = (2 * np.pi) ** (dim / 2) * h**dim * np.prod(std)
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            d2 = float(np.sum((scaled[i] - scaled[j]) ** 2))
            acc += np.exp(-0.5 * d2 / h**2)
        out[i] = acc / (n * norm)
    return out


def brute_force_mapper(points, lens_values, n_intervals, overlap, eps):
    """Oracle: naive mapper construction.

    Returns (clusters, edges) where clusters is a list of sorted member
    tuples in deterministic cell/cluster order, and edges is a list of
    (cluster_index_a, cluster_index_b) pairs that share points.
    """
    points = np.asarray(points, dtype=float)
    lens_values = np.asarray(lens_values, dtype=float)
    if lens_values.ndim == 1:
        lens_values = lens_values[:, None]
    n = points.shape[0]
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span = np.where(span == 0, 1.0, span)
    norm = (points - lo) / span

    axis_intervals = []
    for a in range(lens_values.shape[1]):
        vmin, vmax = lens_values[:, a].min(), lens_values[:, a].max()
        if vmax <= vmin:
            axis_intervals.append([(vmin - 0.5, vmin + 0.5)])
            continue
        length = (vmax - vmin) / (n_intervals - overlap * (n_intervals - 1))
        step = length * (1 - overlap)
        axis_intervals.append([(vmin + i * step, vmin + i * step + length) for i in range(n_intervals)])

    cells = [[]]
    for intervals in axis_intervals:
        cells = [c + [iv] for c in cells for iv in intervals]

    clusters = []
    for cell in cells:
        members = []
        for i in range(n):
            if all(lo_ <= lens_values[i, a] <= hi_ for a, (lo_, hi_) in enumerate(cell)):
                members.append(i)
        if not members:
            continue
        # transitive closure over the <= eps relation, naively
        remaining = list(members)
        comps = []
        while remaining:
            comp = {remaining[0]}
            changed = True
            while changed:
                changed = False
                for i in list(remaining):
                    if i in comp:
                        continue
                    kill = False
                    for j in comp:
                        if np.linalg.norm(norm[i] - norm[j]) <= eps:
                            kill = True
                            break
                    if kill:
                        comp.add(i)
                        changed = True
            comps.append(tuple(sorted(comp)))
            remaining = [i for i in remaining if i not in comp]
        comps.sort(key=lambda c: c[0])
        clusters.extend(comps)

    edges = []
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            if set(clusters[i]) & set(clusters[j]):
                edges.append((i, j))
    return clusters, edges


def canonical_graph(clusters, edges):
    """Order-independent form: multiset of member tuples + member-pair edges."""
    nodes = sorted(clusters)
    edge_keys = sorted(tuple(sorted((clusters[a], clusters[b]))) for a, b in edges)
    return nodes, edge_keys
