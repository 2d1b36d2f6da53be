"""Agglomerative hierarchical clustering of a distance matrix.

Merges follow the scipy numbering convention: leaves are clusters 0..N-1 and
the k-th merge creates cluster N+k.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np

from .errors import ParseError, ValidationError

LINKAGES = ("complete", "single", "average")


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float


@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def members(self) -> list[list[int]]:
        """Leaf indices under every cluster id."""
        groups = [[i] for i in range(len(self.leaves))]
        for m in self.merges:
            groups.append(groups[m.a] + groups[m.b])
        return groups

    def to_json(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "merges": [{"a": m.a, "b": m.b, "height": m.height} for m in self.merges],
        }

    @classmethod
    def from_json(cls, obj) -> "Dendrogram":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(obj["leaves"]), tuple(Merge(int(m["a"]), int(m["b"]), float(m["height"]))
                                               for m in obj["merges"]))


@dataclass(frozen=True)
class ClusterCut:
    threshold: float
    clusters: list[list[str]]
    n_nontrivial: int

    def labels(self) -> dict[str, int]:
        return {code: k for k, members in enumerate(self.clusters) for code in members}


def _validate(D: np.ndarray) -> None:
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {D.shape}")
    if D.shape[0] < 2:
        raise ValidationError("need at least two items to cluster")
    if not np.all(np.isfinite(D)):
        raise ValidationError("distance matrix has non-finite entries")
    if np.any(D < 0):
        raise ValidationError("distance matrix has negative entries")
    if not np.array_equal(D, D.T):
        raise ValidationError("distance matrix is not symmetric")
    if np.any(np.diag(D) != 0):
        raise ValidationError("distance matrix diagonal is not zero")


def agglomerate(D, labels=None, linkage: str = "complete") -> Dendrogram:
    """Merge the closest pair of active clusters until one remains.

    ``complete`` uses the largest cross-pair distance, ``single`` the smallest
    and ``average`` the unweighted mean.  Exact ties go to the lexicographically
    smallest pair of cluster ids.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}")
    D = np.asarray(getattr(D, "d", D), dtype=float)
    _validate(D)
    n = D.shape[0]
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = tuple(labels)
    if len(labels) != n:
        raise ValidationError("label count does not match matrix size")

    # Inter-cluster distances over slots 0..2n-2; inactive slots hold inf.
    size = 2 * n - 1
    L = np.full((size, size), np.inf)
    L[:n, :n] = D
    np.fill_diagonal(L, np.inf)
    count = np.zeros(size, dtype=int)
    count[:n] = 1
    active = list(range(n))
    merges = []
    for k in range(n - 1):
        idx = np.array(active)
        sub = L[np.ix_(idx, idx)]
        best = sub.min()
        # Row-major scan over ascending ids gives the smallest (a, b) pair first.
        i, j = np.argwhere(sub == best)[0]
        a, b = int(idx[i]), int(idx[j])
        new = n + k
        merges.append(Merge(a, b, float(best)))
        rest = [c for c in active if c not in (a, b)]
        if rest:
            r = np.array(rest)
            da, db = L[a, r], L[b, r]
            if linkage == "complete":
                dn = np.maximum(da, db)
            elif linkage == "single":
                dn = np.minimum(da, db)
            else:
                dn = (count[a] * da + count[b] * db) / (count[a] + count[b])
            L[new, r] = dn
            L[r, new] = dn
        count[new] = count[a] + count[b]
        L[a, :] = L[:, a] = np.inf
        L[b, :] = L[:, b] = np.inf
        active = rest + [new]
    return Dendrogram(labels, tuple(merges))


def cut_threshold(dend: Dendrogram, d_th: float) -> ClusterCut:
    """Flat clusters left after discarding every merge at height >= d_th."""
    n = len(dend.leaves)
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, m in enumerate(dend.merges):
        if m.height < d_th:
            parent[find(m.a)] = n + k
            parent[find(m.b)] = n + k
    groups: dict[int, list[str]] = {}
    for i, name in enumerate(dend.leaves):
        groups.setdefault(find(i), []).append(name)
    clusters = sorted((sorted(g) for g in groups.values()), key=lambda g: (-len(g), g))
    return ClusterCut(float(d_th), clusters, sum(1 for g in clusters if len(g) >= 2))


def max_cluster_cut(dend: Dendrogram) -> tuple[float, ClusterCut]:
    """Threshold giving the most clusters with at least two members.

    Candidates are midpoints between consecutive distinct merge heights
    (with zero prepended); ties go to the smaller threshold.
    """
    levels = np.unique(np.concatenate([[0.0], dend.heights]))
    if len(levels) < 2:
        cut = cut_threshold(dend, 0.0)
        return 0.0, cut
    best = None
    for lo, hi in zip(levels[:-1], levels[1:]):
        cut = cut_threshold(dend, 0.5 * (lo + hi))
        if best is None or cut.n_nontrivial > best.n_nontrivial:
            best = cut
    return best.threshold, best


# ---------------------------------------------------------------------------
# Newick


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _dec(x: float) -> Decimal:
    # Heights are rounded to 12 significant digits; lengths are their exact decimal differences.
    return Decimal(_fmt(x))


def _dec_str(d: Decimal) -> str:
    return format(d.normalize(), "f")


def export_newick(dend: Dendrogram) -> str:
    """Newick text with branch lengths equal to height differences.

    Heights are rounded to 12 significant digits first.  Children are ordered
    by their smallest leaf name so output is deterministic.
    """
    n = len(dend.leaves)
    if n == 1:
        return f"{dend.leaves[0]};"
    heights = [Decimal(0)] * n + [_dec(m.height) for m in dend.merges]
    children = {n + k: (m.a, m.b) for k, m in enumerate(dend.merges)}
    first = list(dend.leaves) + [None] * len(dend.merges)
    for k, m in enumerate(dend.merges):
        first[n + k] = min(first[m.a], first[m.b])

    def render(node: int) -> str:
        if node < n:
            return dend.leaves[node]
        kids = sorted(children[node], key=lambda c: first[c])
        parts = [f"{render(c)}:{_dec_str(heights[node] - heights[c])}" for c in kids]
        return "(" + ",".join(parts) + ")"

    return render(2 * n - 2) + ";"


_TOKEN = re.compile(r"\s*([(),:;]|[^(),:;\s]+)")


def parse_newick(text: str) -> Dendrogram:
    """Inverse of :func:`export_newick` for ultrametric binary trees."""
    tokens = _TOKEN.findall(text.strip())
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"Newick: expected {expected or 'token'}, got {tok!r} at token {pos}")
        pos += 1
        return tok

    # Nodes: ("leaf", name) or ("node", [(child, length), ...])
    def node():
        if peek() == "(":
            take("(")
            kids = [child()]
            while peek() == ",":
                take(",")
                kids.append(child())
            take(")")
            return ("node", kids)
        name = take()
        if name in "(),:;":
            raise ParseError(f"Newick: unexpected {name!r}")
        return ("leaf", name)

    def child():
        nd = node()
        take(":")
        try:
            length = Decimal(take())
        except InvalidOperation:
            raise ParseError("Newick: bad branch length") from None
        if not length.is_finite() or length < 0:
            raise ParseError(f"Newick: bad branch length {length}")
        return nd, length

    root = node()
    take(";")
    if peek() is not None:
        raise ParseError("Newick: trailing text after ';'")

    leaves: list[str] = []
    internal = []  # (height, child ids)

    def build(nd) -> tuple[tuple, Decimal]:
        kind, payload = nd
        if kind == "leaf":
            leaves.append(payload)
            return ("leaf", len(leaves) - 1), Decimal(0)
        if len(payload) != 2:
            raise ParseError("Newick: only binary trees are supported")
        built = [(build(c), length) for c, length in payload]
        h = max(ch + length for (_, ch), length in built)
        ref = ("int", len(internal))
        internal.append((h, [cid for (cid, _), _ in built]))
        return ref, h

    build(root)
    n = len(leaves)
    order = sorted(range(len(internal)), key=lambda i: (internal[i][0], i))
    ids = {}
    merges = []
    for k, i in enumerate(order):
        h, kids = internal[i]
        resolved = [c[1] if c[0] == "leaf" else ids[c[1]] for c in kids]
        a, b = sorted(resolved)
        merges.append(Merge(a, b, float(h)))
        ids[i] = n + k
    return Dendrogram(tuple(leaves), tuple(merges))


def merge_table(dend: Dendrogram) -> list[dict]:
    """Plot-ready merge coordinates: step, the two children, height and size."""
    sizes = [1] * len(dend.leaves)
    rows = []
    for k, m in enumerate(dend.merges):
        sizes.append(sizes[m.a] + sizes[m.b])
        rows.append({"step": k, "a": m.a, "b": m.b, "height": m.height, "size": sizes[-1]})
    return rows


def write_cut_csv(cut: ClusterCut, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "cluster_id"])
        for code, k in sorted(cut.labels().items()):
            w.writerow([code, k])

