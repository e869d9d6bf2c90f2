"""Factored l1-oblivious routing A = B C built from independent decompositions per level.

Column v of A is a distribution over v-to-root paths: at each level boundary
l -> l+1 the mass p_{l,d,C}(v)/w_l(v) * p_{l+1,d',C'}(v)/w_{l+1}(v) travels
from the level-l center to the level-(l+1) center through a witness vertex,
along forest paths expressed as dyadic segments.  ``C`` maps demands to
segment coefficients and ``B`` maps segments to edges.

Levels 0 and L hold one copy each, standing for all identical copies
(singletons centered at themselves, and V centered at the root).  Such a
copy has ``multiplicity`` equal to the copy count, so every weight and
coefficient matches the per-copy definition.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .decomp import Clustering, rooted_clustering, sample_clustering, singleton_clustering
from .graph import WeightedGraph, num_levels
from .hierarchy import ROOT, center_dist_cap, normalize_mode
from .paths import PathCollection
from .rng import as_streams
from .sssp import dijkstra

FORMAT_VERSION = 1
PRUNE = 1e-15


class RoutingBuildError(RuntimeError):
    pass


class UnbalancedDemandError(ValueError):
    pass


def copies_per_level(n: int, log_base: str = "ln") -> int:
    """36 log n decompositions per level (natural log unless ``log_base='lg'``)."""
    if n <= 1:
        return 1
    if log_base == "ln":
        return math.ceil(36.0 * math.log(n))
    if log_base == "lg":
        return math.ceil(36.0 * math.log2(n))
    raise ValueError(f"unknown log base {log_base!r}")


def compute_p_values(graph: WeightedGraph, clustering: Clustering, l: int | None = None):
    """Distance from each clustered vertex to the outside of its cluster, and p = min(1, that / 2^l).

    Every cluster vertex with an edge leaving the cluster is seeded with its
    lightest leaving edge; the search then stays inside the cluster.
    Unclustered vertices get distance 0 and p = 0; a cluster equal to V has
    infinite distance and p = 1.
    """
    scale = float(2**l) if l is not None else clustering.scale
    label = clustering.assignment
    seeds: dict[int, float] = {}
    for x in np.flatnonzero(label >= 0):
        lx = label[x]
        best = math.inf
        for y, w, _ in graph.adj[x]:
            if label[y] != lx and w < best:
                best = w
        if best < math.inf:
            seeds[int(x)] = best
    dist, _ = dijkstra(graph.adj, graph.n, sorted(seeds.items()), label=label)
    boundary = np.array(dist, dtype=float)
    boundary[label < 0] = 0.0
    p = np.minimum(1.0, boundary / scale)
    p[label < 0] = 0.0
    return boundary, p


@dataclass(frozen=True, eq=False)
class LevelCopy:
    level: int
    index: int
    multiplicity: int
    clustering: Clustering
    boundary_dist: np.ndarray
    p: np.ndarray


@dataclass(frozen=True, eq=False)
class RouteTable:
    """One row per used (l, d, d', C, C'): copies, clusters, witness and path weight."""

    level: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_cluster: np.ndarray
    upper_cluster: np.ndarray
    witness: np.ndarray
    length: np.ndarray

    def __len__(self) -> int:
        return len(self.level)


@dataclass(eq=False)
class RoutingOperator:
    graph: WeightedGraph
    mode: str
    L: int
    dcnt: int
    levels: tuple[tuple[LevelCopy, ...], ...]
    weights: tuple[np.ndarray, ...]
    paths: PathCollection
    routes: RouteTable
    coefficients: sparse.csr_matrix      # routes x n, f values
    route_segments: sparse.csc_matrix    # segments x routes, signed
    B: sparse.csr_matrix                 # edges x segments
    C: sparse.csr_matrix                 # segments x vertices
    attempts: dict = field(default_factory=dict)
    root: int = ROOT

    @property
    def shape(self) -> tuple[int, int]:
        return (self.graph.m, self.graph.n)

    def apply(self, d) -> np.ndarray:
        return apply(self, d)

    def apply_transpose(self, y) -> np.ndarray:
        return apply_transpose(self, y)

    def as_linear_operator(self):
        from scipy.sparse.linalg import LinearOperator

        return LinearOperator(self.shape, matvec=lambda d: self.B @ (self.C @ d),
                              rmatvec=lambda y: self.C.T @ (self.B.T @ y), dtype=float)

    def share(self, l: int, k: int) -> np.ndarray:
        """Coefficient mass of copy k at level l per vertex (multiplicity * p / w)."""
        c = self.levels[l][k]
        return c.multiplicity * c.p / self.weights[l]

    def route_path(self, r: int) -> list[tuple[int, int]]:
        """Ordered signed segments from the lower center through the witness to the upper center."""
        l = int(self.routes.level[r])
        w = int(self.routes.witness[r])
        down = self.paths.root_path((l, int(self.routes.lower[r])), w)
        up = self.paths.root_path((l + 1, int(self.routes.upper[r])), w)
        return down + [(s, -sign) for s, sign in reversed(up)]

    def expand_walk(self, signed_segments) -> list[int]:
        walk: list[int] = []
        for seg, sign in signed_segments:
            verts = self.paths.segment_vertices(seg)
            if sign < 0:
                verts = verts[::-1]
            if len(verts) < 2:
                continue
            if walk and walk[-1] != verts[0]:
                raise ValueError("segments do not chain")
            walk.extend(verts[1:] if walk else verts)
        return walk


def _conventional_copies(graph: WeightedGraph, L: int, dcnt: int):
    n = graph.n
    bottom = singleton_clustering(graph, 1.0)
    boundary, _ = compute_p_values(graph, bottom, 0)
    low = LevelCopy(0, 0, dcnt, bottom, boundary, np.ones(n))
    if L == 0:
        return low, low
    top_cl = rooted_clustering(graph, ROOT, float(2**L))
    high = LevelCopy(L, 0, dcnt, top_cl, np.full(n, math.inf), np.ones(n))
    return low, high


def _sample_level(graph, l, dcnt, mode, streams, eps, max_resamples):
    n = graph.n
    scale = float(2**l)
    cap = center_dist_cap(n, scale)
    for attempt in range(max_resamples):
        copies = []
        ok = True
        for d in range(dcnt):
            gen = streams.spawn("routing", l, attempt, d).generator()
            cl = sample_clustering(graph, scale, gen, mode, eps)
            clustered = cl.assignment >= 0
            if clustered.any() and cl.center_dist[clustered].max() > cap:
                ok = False
                break
            boundary, p = compute_p_values(graph, cl, l)
            copies.append(LevelCopy(l, d, 1, cl, boundary, p))
        if not ok:
            continue
        w = np.sum([c.p for c in copies], axis=0)
        if (w >= dcnt / 16.0).all() and (w <= dcnt).all():
            return tuple(copies), attempt + 1
    raise RoutingBuildError(f"level {l}: conditioning events failed {max_resamples} times")


def _boundary_routes(l, lower, upper, shares_low, shares_up, n):
    """Group vertices by (d', C, C') for each lower copy d; one route and witness per group."""
    up_cid = np.vstack([c.clustering.assignment for c in upper])
    up_td = np.vstack([c.clustering.center_dist for c in upper])
    up_a = np.vstack(shares_up)
    out = []
    for k, low in enumerate(lower):
        a = shares_low[k]
        cid = low.clustering.assignment
        td = low.clustering.center_dist
        coef_all = a[None, :] * up_a
        kk, vv = np.nonzero(coef_all >= PRUNE)
        if len(kk) == 0:
            continue
        coef = coef_all[kk, vv]
        score = td[vv] + up_td[kk, vv]
        c_low = cid[vv]
        c_up = up_cid[kk, vv]
        key = (kk.astype(np.int64) * n + c_low) * n + c_up
        order = np.lexsort((vv, score, key))
        ks = key[order]
        first = np.ones(len(ks), dtype=bool)
        first[1:] = ks[1:] != ks[:-1]
        group_sorted = np.cumsum(first) - 1
        group = np.empty_like(group_sorted)
        group[order] = group_sorted
        heads = order[first]
        out.append((k, kk[heads], c_low[heads], c_up[heads], vv[heads], score[heads], group, vv, coef))
    return out


def build_routing_operator(graph: WeightedGraph, mode: str = "exact", rng=0, *, dcnt: int | None = None,
                           log_base: str = "ln", eps: float | None = None,
                           max_resamples: int = 32) -> RoutingOperator:
    mode = normalize_mode(mode)
    streams = as_streams(rng)
    n = graph.n
    L = num_levels(graph)
    if dcnt is None:
        dcnt = copies_per_level(n, log_base)
    low, high = _conventional_copies(graph, L, dcnt)
    levels: list[tuple[LevelCopy, ...]] = [(low,)]
    attempts = {}
    for l in range(1, L):
        copies, attempts[l] = _sample_level(graph, l, dcnt, mode, streams, eps, max_resamples)
        levels.append(copies)
    if L > 0:
        levels.append((high,))
    weights = tuple(np.sum([c.multiplicity * c.p for c in copies], axis=0) for copies in levels)

    paths = PathCollection(n)
    for copies in levels:
        for c in copies:
            paths.add_forest((c.level, c.index), c.clustering.parent)
    fid = {key: i for i, key in enumerate(paths.forests())}

    shares = [[c.multiplicity * c.p / weights[l] for c in copies] for l, copies in enumerate(levels)]
    cols = {k: [] for k in ("level", "lower", "upper", "lower_cluster", "upper_cluster", "witness", "length")}
    f_rows, f_cols, f_vals = [], [], []
    n_routes = 0
    for l in range(L):
        for k, kk, c_low, c_up, wit, length, group, vv, coef in _boundary_routes(
                l, levels[l], levels[l + 1], shares[l], shares[l + 1], n):
            g = len(wit)
            cols["level"].append(np.full(g, l))
            cols["lower"].append(np.full(g, k))
            cols["upper"].append(kk)
            cols["lower_cluster"].append(c_low)
            cols["upper_cluster"].append(c_up)
            cols["witness"].append(wit)
            cols["length"].append(length)
            f_rows.append(group + n_routes)
            f_cols.append(vv)
            f_vals.append(coef)
            n_routes += g

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    routes = RouteTable(*(cat(cols[k], np.int64) for k in ("level", "lower", "upper", "lower_cluster",
                                                           "upper_cluster", "witness")),
                        cat(cols["length"], float))
    F = sparse.csr_matrix((cat(f_vals, float), (cat(f_rows, np.int64), cat(f_cols, np.int64))),
                          shape=(n_routes, n))
    S = _route_segment_matrix(paths, routes, fid, n)
    B = paths.edge_matrix(graph).tocsr()
    C = (S @ F).tocsr()
    C.eliminate_zeros()
    return RoutingOperator(graph, mode, L, dcnt, tuple(levels), weights, paths, routes, F, S, B, C, attempts)


def _route_segment_matrix(paths: PathCollection, routes: RouteTable, fid: dict, n: int) -> sparse.csc_matrix:
    """S = Q R: Q holds root paths of used (forest, witness) pairs, R = +lower -upper per route."""
    lower_pair = np.array([fid[(l, k)] for l, k in zip(routes.level.tolist(), routes.lower.tolist())],
                          dtype=np.int64) * n + routes.witness
    upper_pair = np.array([fid[(l + 1, k)] for l, k in zip(routes.level.tolist(), routes.upper.tolist())],
                          dtype=np.int64) * n + routes.witness
    used, inverse = np.unique(np.concatenate([lower_pair, upper_pair]), return_inverse=True)
    inverse = inverse.reshape(-1)
    keys = list(paths.forests())
    q_rows, q_cols = [], []
    for j, pair in enumerate(used.tolist()):
        key = keys[pair // n]
        segs = paths.root_path(key, pair % n)
        q_rows.extend(s for s, _ in segs)
        q_cols.extend([j] * len(segs))
    Q = sparse.csc_matrix((np.ones(len(q_rows)), (q_rows, q_cols)), shape=(paths.n_segments, len(used)))
    r = len(routes)
    R = sparse.csc_matrix(
        (np.concatenate([np.ones(r), -np.ones(r)]), (inverse, np.concatenate([np.arange(r), np.arange(r)]))),
        shape=(len(used), r))
    return (Q @ R).tocsc()


def _check_demand(op: RoutingOperator, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (op.graph.n,):
        raise ValueError(f"demand must have length {op.graph.n}")
    if abs(d.sum()) > 1e-9 * np.abs(d).sum():
        raise UnbalancedDemandError(f"demand sums to {d.sum():g}, not 0")
    return d


def apply(op: RoutingOperator, d) -> np.ndarray:
    """Flow A d = B (C d) on the edges, oriented low id -> high id."""
    d = _check_demand(op, d)
    return op.B @ (op.C @ d)


def apply_transpose(op: RoutingOperator, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (op.graph.m,):
        raise ValueError(f"edge vector must have length {op.graph.m}")
    return op.C.T @ (op.B.T @ y)


def divergence(graph: WeightedGraph, flow) -> np.ndarray:
    """Net out-flow per vertex."""
    return graph.incidence() @ np.asarray(flow, dtype=float)


def flow_norm(flow) -> float:
    """Unit-cost l1 norm sum |f(e)|."""
    return float(np.abs(flow).sum())


def flow_cost(graph: WeightedGraph, flow) -> float:
    """Weighted l1 cost sum w(e) |f(e)|."""
    return float(graph.edge_w @ np.abs(flow))


@dataclass
class RatioReport:
    ratios: np.ndarray
    max_ratio: float
    worst_edge: tuple[int, int]
    threshold: float
    passed: bool
    histogram: list

    def summary(self, n: int) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "worst_edge": list(self.worst_edge),
            "threshold": self.threshold,
            "passed": self.passed,
            "measured_constant": self.max_ratio / math.log(n) if n > 1 else self.max_ratio,
            "histogram": self.histogram,
        }


def edge_flows(op: RoutingOperator) -> np.ndarray:
    """Dense m x m matrix whose column e is A(1_u - 1_v) for edge e = (u, v), u < v."""
    inc = op.graph.incidence()
    return np.asarray((op.B @ (op.C @ inc)).todense())


def verify_competitive_ratio(op: RoutingOperator, graph: WeightedGraph | None = None,
                             threshold: float | None = None) -> RatioReport:
    """Max over edges of cost(A(1_u - 1_v)) / dist(u, v), with weighted l1 cost."""
    graph = graph or op.graph
    n, m = graph.n, graph.m
    if threshold is None:
        threshold = 64.0 * math.log(n) if n > 1 else math.inf
    if m == 0:
        return RatioReport(np.zeros(0), 0.0, (0, 0), threshold, True, [])
    flows = edge_flows(op)
    cost = graph.edge_w @ np.abs(flows)
    dist = np.array([graph.distance(int(u), int(v)) for u, v in zip(graph.edge_u, graph.edge_v)])
    ratios = cost / dist
    e = int(np.argmax(ratios))
    edges = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, math.inf]
    counts, _ = np.histogram(ratios, bins=edges)
    hist = [{"lo": edges[i], "hi": edges[i + 1], "count": int(c)} for i, c in enumerate(counts)]
    mx = float(ratios[e])
    return RatioReport(ratios, mx, (int(graph.edge_u[e]), int(graph.edge_v[e])), threshold, mx <= threshold, hist)


class CertificationError(RuntimeError):
    pass


def verify_or_rebuild(graph: WeightedGraph, mode: str = "exact", rng=0, threshold: float | None = None, *,
                      max_attempts: int = 16, **build_kw) -> tuple[RoutingOperator, int]:
    """Rebuild until the edge-ratio check passes; returns the operator and the attempt count."""
    if threshold is not None and not threshold > 1:
        raise ValueError("threshold must exceed 1")
    streams = as_streams(rng)
    for attempt in range(1, max_attempts + 1):
        op = build_routing_operator(graph, mode, streams.spawn("certify", attempt), **build_kw)
        if verify_competitive_ratio(op, threshold=threshold).passed:
            return op, attempt
    raise CertificationError(f"no operator met the threshold in {max_attempts} attempts")


# -- internal identities -------------------------------------------------------

def _copy_sums(op: RoutingOperator, which: str) -> tuple[list, np.ndarray]:
    """Per (level, copy) totals of route coefficients, grouped by the lower or upper copy."""
    keys = []
    index = {}
    for l, copies in enumerate(op.levels):
        for c in copies:
            index[(l, c.index)] = len(keys)
            keys.append((l, c.index))
    if which == "lower":
        ids = [index[(l, k)] for l, k in zip(op.routes.level.tolist(), op.routes.lower.tolist())]
    else:
        ids = [index[(l + 1, k)] for l, k in zip(op.routes.level.tolist(), op.routes.upper.tolist())]
    r = len(op.routes)
    P = sparse.csr_matrix((np.ones(r), (np.array(ids, dtype=np.int64), np.arange(r))), shape=(len(keys), r))
    return keys, np.asarray((P @ op.coefficients).todense())


def outflow_residual(op: RoutingOperator) -> float:
    """Max |sum_{d',C'} f_{l,d,d',C,C'}(v) - share_{l,d}(v)| over l < L, and the matching in-flow check for l > 0."""
    worst = 0.0
    for which, skip in (("lower", op.L), ("upper", 0)):
        keys, sums = _copy_sums(op, which)
        for i, (l, k) in enumerate(keys):
            if l == skip:
                continue
            worst = max(worst, float(np.abs(sums[i] - op.share(l, k)).max(initial=0.0)))
    return worst


def column_mass(op: RoutingOperator) -> np.ndarray:
    """Total coefficient per (boundary l, vertex); every entry should be 1."""
    out = np.zeros((op.L, op.graph.n))
    for l in range(op.L):
        rows = np.flatnonzero(op.routes.level == l)
        out[l] = np.asarray(op.coefficients[rows].sum(axis=0)).reshape(-1)
    return out


def lipschitz_constants(op: RoutingOperator) -> np.ndarray:
    """Per boundary l: max over edges of sum |f(v) - f(u)| * 2^l / dist(u, v)."""
    g = op.graph
    inc = g.incidence()
    dist = np.array([g.distance(int(u), int(v)) for u, v in zip(g.edge_u, g.edge_v)])
    out = np.zeros(op.L)
    for l in range(op.L):
        rows = np.flatnonzero(op.routes.level == l)
        diff = op.coefficients[rows] @ inc
        col = np.asarray(abs(diff).sum(axis=0)).reshape(-1)
        out[l] = float((col * 2**l / dist).max(initial=0.0))
    return out


# -- serialization -------------------------------------------------------------

def _coo_arrays(prefix: str, mat) -> dict:
    coo = mat.tocoo()
    return {f"{prefix}_row": coo.row, f"{prefix}_col": coo.col, f"{prefix}_val": coo.data,
            f"{prefix}_shape": np.array(coo.shape)}


def _from_coo(data, prefix: str, fmt: str):
    shape = tuple(int(x) for x in data[f"{prefix}_shape"])
    mat = sparse.coo_matrix((data[f"{prefix}_val"], (data[f"{prefix}_row"], data[f"{prefix}_col"])), shape=shape)
    return mat.asformat(fmt)


def save_operator(op: RoutingOperator, path: str) -> None:
    header = {
        "version": FORMAT_VERSION,
        "graph_hash": op.graph.digest(),
        "mode": op.mode,
        "L": op.L,
        "dcnt": op.dcnt,
        "root": op.root,
        "copies": [[[c.index, c.multiplicity, c.clustering.scale] for c in copies] for copies in op.levels],
        "attempts": {str(k): v for k, v in op.attempts.items()},
    }
    arrays = {
        "header": np.array(json.dumps(header, sort_keys=True)),
        "edge_u": op.graph.edge_u, "edge_v": op.graph.edge_v, "edge_w": op.graph.edge_w,
        "n": np.array(op.graph.n),
    }
    for l, copies in enumerate(op.levels):
        for c in copies:
            tag = f"L{l}_{c.index}"
            cl = c.clustering
            arrays.update({f"{tag}_assignment": cl.assignment, f"{tag}_centers": cl.centers,
                           f"{tag}_parent": cl.parent, f"{tag}_pw": cl.parent_weight,
                           f"{tag}_cd": cl.center_dist, f"{tag}_boundary": c.boundary_dist, f"{tag}_p": c.p})
    for name in ("level", "lower", "upper", "lower_cluster", "upper_cluster", "witness", "length"):
        arrays[f"route_{name}"] = getattr(op.routes, name)
    arrays.update(_coo_arrays("F", op.coefficients))
    arrays.update(_coo_arrays("S", op.route_segments))
    arrays.update(_coo_arrays("B", op.B))
    arrays.update(_coo_arrays("C", op.C))
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def load_operator(path: str, graph: WeightedGraph | None = None) -> RoutingOperator:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported operator format version {header['version']}")
        if graph is None:
            graph = WeightedGraph(int(data["n"]), zip(data["edge_u"].tolist(), data["edge_v"].tolist(),
                                                      data["edge_w"].tolist()))
        if graph.digest() != header["graph_hash"]:
            raise ValueError("operator was built for a different graph")
        levels = []
        for l, copies in enumerate(header["copies"]):
            row = []
            for index, mult, scale in copies:
                tag = f"L{l}_{index}"
                cl = Clustering(scale, data[f"{tag}_assignment"], data[f"{tag}_centers"], data[f"{tag}_parent"],
                                data[f"{tag}_pw"], data[f"{tag}_cd"])
                row.append(LevelCopy(l, index, mult, cl, data[f"{tag}_boundary"], data[f"{tag}_p"]))
            levels.append(tuple(row))
        routes = RouteTable(*(data[f"route_{k}"] for k in ("level", "lower", "upper", "lower_cluster",
                                                            "upper_cluster", "witness", "length")))
        F = _from_coo(data, "F", "csr")
        S = _from_coo(data, "S", "csc")
        B = _from_coo(data, "B", "csr")
        C = _from_coo(data, "C", "csr")
    paths = PathCollection(graph.n)
    for copies in levels:
        for c in copies:
            paths.add_forest((c.level, c.index), c.clustering.parent)
    weights = tuple(np.sum([c.multiplicity * c.p for c in copies], axis=0) for copies in levels)
    attempts = {int(k): v for k, v in header["attempts"].items()}
    return RoutingOperator(graph, header["mode"], header["L"], header["dcnt"], tuple(levels), weights, paths,
                           routes, F, S, B, C, attempts, header["root"])
