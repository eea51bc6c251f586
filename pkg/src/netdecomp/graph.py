"""Graphs, identifiers, deterministic generators and the edge-list format."""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._util import lg

FAMILIES = ("gnp", "grid", "path", "cycle", "tree", "star", "complete", "file")


class SpecError(ValueError):
    pass


class GraphFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class Graph:
    """Immutable simple undirected graph on nodes 0..n-1."""

    def __init__(self, n: int, edges: Iterable[Tuple[int, int]]):
        if n < 0:
            raise SpecError("n must be nonnegative")
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise SpecError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise SpecError(f"edge ({u},{v}) out of range for n={n}")
            norm.add((u, v) if u < v else (v, u))
        self._n = n
        self._edges = tuple(sorted(norm))
        nbrs: List[List[int]] = [[] for _ in range(n)]
        for u, v in self._edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self._adj = tuple(tuple(sorted(a)) for a in nbrs)

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> Tuple[Tuple[int, int], ...]:
        return self._edges

    @property
    def adj(self) -> Tuple[Tuple[int, ...], ...]:
        return self._adj

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self._adj), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_set

    @cached_property
    def _edge_set(self):
        return frozenset(self._edges)

    @cached_property
    def csr(self) -> Tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with ascending neighbours per row."""
        deg = np.fromiter((len(a) for a in self._adj), dtype=np.int64, count=self._n)
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.fromiter((w for a in self._adj for w in a), dtype=np.int64,
                              count=int(indptr[-1]))
        return indptr, indices

    @cached_property
    def arcs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge as (src, dst) arrays, grouped by src."""
        indptr, indices = self.csr
        src = np.repeat(np.arange(self._n, dtype=np.int64), np.diff(indptr))
        return src, indices

    def sparse(self):
        import scipy.sparse as sp
        indptr, indices = self.csr
        data = np.ones(len(indices), dtype=np.int8)
        return sp.csr_matrix((data, indices, indptr), shape=(self._n, self._n))

    def __eq__(self, other):
        return isinstance(other, Graph) and self._n == other._n and self._edges == other._edges

    def __hash__(self):
        return hash((self._n, self._edges))

    def __repr__(self):
        return f"Graph(n={self._n}, m={self.m})"


@dataclass(frozen=True)
class IdAssignment:
    b: int
    ids: Tuple[int, ...]
    scheme: str = "sequential"

    def __post_init__(self):
        n = len(self.ids)
        if self.b < 0 or (1 << self.b) < n:
            raise SpecError(f"2^{self.b} < {n}: identifier width too small")
        if len(set(self.ids)) != n:
            raise SpecError("identifiers are not distinct")
        for x in self.ids:
            if not 0 <= x < (1 << self.b):
                raise SpecError(f"identifier {x} does not fit in {self.b} bits")

    def __getitem__(self, v: int) -> int:
        return self.ids[v]

    def __len__(self):
        return len(self.ids)

    @cached_property
    def rank(self) -> np.ndarray:
        """Position of each node when nodes are sorted by identifier."""
        order = sorted(range(len(self.ids)), key=self.ids.__getitem__)
        r = np.empty(len(self.ids), dtype=np.int64)
        r[order] = np.arange(len(self.ids))
        return r


def assign_ids(g: Graph, b: Optional[int] = None, scheme: str = "sequential",
               seed: int = 0) -> IdAssignment:
    """Identifiers for g.  scheme is sequential, shuffled or padded.

    padded keeps the sequential values but records a wider b; it is how the
    identifier-independence experiments vary b without changing anything else.
    """
    n = g.n
    if b is None:
        b = lg(n)
    if (1 << b) < n:
        raise SpecError(f"2^{b} < {n}: identifier width too small")
    if scheme in ("sequential", "padded"):
        ids = tuple(range(n))
    elif scheme == "shuffled":
        perm = np.random.default_rng(seed).permutation(n)
        ids = tuple(int(x) for x in perm)
    else:
        raise SpecError(f"unknown id scheme {scheme!r}")
    return IdAssignment(b, ids, scheme)


# --- generators -----------------------------------------------------------

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def pair_uniform(seed: int, i, j) -> np.ndarray:
    """Counter-based uniform in [0,1) for the unordered pair keyed by (seed, i, j)."""
    with np.errstate(over="ignore"):
        s = _splitmix(np.asarray([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        a = np.asarray(i, dtype=np.uint64)
        c = np.asarray(j, dtype=np.uint64)
        h = _splitmix(_splitmix(s ^ a) ^ (c * np.uint64(0xD1342543DE82EF95)))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _gnp(n: int, p: float, seed: int) -> List[Tuple[int, int]]:
    edges = []
    if p <= 0 or n < 2:
        return edges
    for i in range(n - 1):
        js = np.arange(i + 1, n, dtype=np.uint64)
        hit = js[pair_uniform(seed, i, js) < p]
        edges.extend((i, int(j)) for j in hit)
    return edges


def _random_tree(n: int, seed: int) -> List[Tuple[int, int]]:
    # random recursive tree: node i attaches below a node chosen among 0..i-1
    if n < 2:
        return []
    idx = np.arange(1, n, dtype=np.uint64)
    u = pair_uniform(seed, idx, np.zeros_like(idx))
    parents = (u * np.arange(1, n)).astype(np.int64)
    return [(int(p), i + 1) for i, p in enumerate(parents)]


@dataclass(frozen=True)
class GraphSpec:
    family: str
    params: Tuple[Tuple[str, str], ...] = ()
    seed: int = 0

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def __str__(self):
        if self.family == "file":
            return str(self.get("path"))
        body = ",".join(f"{k}={v}" for k, v in self.params)
        return f"gen:{self.family}:{body}"


def parse_spec(text: str, seed: int = 0) -> GraphSpec:
    """`gen:family:k=v,...` or a plain file path."""
    if not text.startswith("gen:"):
        return GraphSpec("file", (("path", text),), seed)
    parts = text.split(":", 2)
    family = parts[1]
    if family not in FAMILIES or family == "file":
        raise SpecError(f"unknown graph family {family!r}")
    params = []
    if len(parts) > 2 and parts[2]:
        for item in parts[2].split(","):
            if "=" not in item:
                raise SpecError(f"bad parameter {item!r}")
            k, v = item.split("=", 1)
            params.append((k.strip(), v.strip()))
    return GraphSpec(family, tuple(params), seed)


def _int_param(spec: GraphSpec, key: str, lo: int = 0, default=None) -> int:
    raw = spec.get(key, default)
    if raw is None:
        raise SpecError(f"{spec.family} needs parameter {key}")
    try:
        val = int(raw)
    except (TypeError, ValueError):
        raise SpecError(f"{key} must be an integer, got {raw!r}")
    if val < lo:
        raise SpecError(f"{key} must be >= {lo}")
    return val


def generate(spec: GraphSpec) -> Graph:
    f = spec.family
    if f == "file":
        return load_graph(spec.get("path"))
    if f == "gnp":
        n = _int_param(spec, "n")
        try:
            p = float(spec.get("p", "nan"))
        except ValueError:
            raise SpecError("p must be a number")
        if not 0.0 <= p <= 1.0:
            raise SpecError(f"p={p} outside [0,1]")
        return Graph(n, _gnp(n, p, spec.seed))
    if f == "grid":
        rows = _int_param(spec, "rows", 1, spec.get("n"))
        cols = _int_param(spec, "cols", 1, rows)
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return Graph(rows * cols, edges)
    if f == "path":
        n = _int_param(spec, "n")
        return Graph(n, [(i, i + 1) for i in range(n - 1)])
    if f == "cycle":
        n = _int_param(spec, "n", 3)
        return Graph(n, [(i, (i + 1) % n) for i in range(n)])
    if f == "tree":
        n = _int_param(spec, "n")
        return Graph(n, _random_tree(n, spec.seed))
    if f == "star":
        n = _int_param(spec, "n", 1)
        return Graph(n, [(0, i) for i in range(1, n)])
    if f == "complete":
        n = _int_param(spec, "n")
        return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    raise SpecError(f"unknown graph family {f!r}")


def gen(family: str, seed: int = 0, **params) -> Graph:
    """Shorthand used by tests and the bench: gen('gnp', n=64, p=0.1, seed=3)."""
    return generate(GraphSpec(family, tuple((k, str(v)) for k, v in params.items()), seed))


# --- file format ----------------------------------------------------------

def format_graph(g: Graph, ids: Optional[IdAssignment] = None) -> str:
    lines = [f"p {g.n} {g.m}"]
    lines += [f"e {u} {v}" for u, v in g.edges]
    if ids is not None:
        lines.append(f"b {ids.b}")
        lines += [f"i {v} {x}" for v, x in enumerate(ids.ids)]
    return "\n".join(lines) + "\n"


def save_graph(g: Graph, path, ids: Optional[IdAssignment] = None) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g, ids))


def parse_graph(text: str) -> Tuple[Graph, Optional[IdAssignment]]:
    n = m = None
    edges: List[Tuple[int, int]] = []
    seen = set()
    bits = None
    idmap: Dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            nums = [int(t) for t in tok[1:]]
        except ValueError:
            raise GraphFormatError(lineno, f"non-integer field in {line!r}")
        kind = tok[0]
        if kind == "p":
            if n is not None or len(nums) != 2 or min(nums) < 0:
                raise GraphFormatError(lineno, "bad header")
            n, m = nums
        elif kind == "e":
            if n is None:
                raise GraphFormatError(lineno, "edge before header")
            if len(nums) != 2:
                raise GraphFormatError(lineno, "edge needs two endpoints")
            u, v = nums
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(lineno, f"endpoint out of range for n={n}")
            if u == v:
                raise GraphFormatError(lineno, "self-loop")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(lineno, f"duplicate edge {key}")
            seen.add(key)
            edges.append(key)
        elif kind == "b":
            if len(nums) != 1:
                raise GraphFormatError(lineno, "bad id width line")
            bits = nums[0]
        elif kind == "i":
            if n is None or len(nums) != 2 or not 0 <= nums[0] < n:
                raise GraphFormatError(lineno, "bad identifier line")
            if nums[0] in idmap:
                raise GraphFormatError(lineno, f"identifier for node {nums[0]} repeated")
            idmap[nums[0]] = nums[1]
        else:
            raise GraphFormatError(lineno, f"unknown record {kind!r}")
    if n is None:
        raise GraphFormatError(0, "missing header")
    if m != len(edges):
        raise GraphFormatError(0, f"header announces {m} edges, found {len(edges)}")
    g = Graph(n, edges)
    ids = None
    if idmap:
        if bits is None or len(idmap) != n:
            raise GraphFormatError(0, "identifier sidecar incomplete")
        ids = IdAssignment(bits, tuple(idmap[v] for v in range(n)), "file")
    return g, ids


def load_graph(path) -> Graph:
    return load_graph_with_ids(path)[0]


def load_graph_with_ids(path) -> Tuple[Graph, Optional[IdAssignment]]:
    with open(path) as fh:
        return parse_graph(fh.read())


def bfs_distances(g: Graph, sources: Sequence[int], allowed=None) -> np.ndarray:
    """Hop distances from a source set, -1 where unreachable."""
    dist = np.full(g.n, -1, dtype=np.int64)
    frontier = [s for s in sources if allowed is None or allowed[s]]
    for s in frontier:
        dist[s] = 0
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for w in g.adj[u]:
                if dist[w] < 0 and (allowed is None or allowed[w]):
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist
