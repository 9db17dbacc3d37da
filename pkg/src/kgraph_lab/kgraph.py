"""Finite k-graphs presented as colored skeletons with commuting squares.

A k-graph is stored as a colored directed multigraph together with one
commuting square per composable bi-colored edge pair.  Paths are kept in a
color-sorted canonical form (all color-1 edges first, then color-2, ...);
two paths are equal iff their canonical edge lists agree.  Reordering a
path is done by "bubbling" adjacent edge pairs through the square table.

Conventions
-----------
* An edge e is a morphism from ``e.source`` to ``e.range`` (arrow head at
  the range).  Paths are read range-to-source: in ``p = e1 e2 ... en`` the
  edge ``e1`` touches the range and ``s(e_t) = r(e_{t+1})``.
* A square pairs a (lower color, higher color) path with the equal
  (higher, lower) path:  ``left = (a, b)`` with ``color(a) < color(b)``
  and ``right = (c, d)`` with ``color(c) > color(d)``, as morphisms
  ``a.b = c.d``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .errors import (
    CubeConditionFailed,
    DanglingEndpoint,
    DegreeCapExceeded,
    DegreeOutOfRange,
    DepthTooSmall,
    InvalidPermutation,
    InvalidSquare,
    NotComposable,
    SourceVertex,
    SquareNotBijective,
)

# ---------------------------------------------------------------------------
# degree vectors (tuples of nonnegative ints)


def deg_zero(k):
    return (0,) * k


def deg_unit(k, color):
    """Standard basis vector for a 1-based color index."""
    return tuple(1 if c == color else 0 for c in range(1, k + 1))


def deg_add(m, n):
    return tuple(a + b for a, b in zip(m, n))


def deg_sub(m, n):
    return tuple(a - b for a, b in zip(m, n))


def deg_le(m, n):
    return all(a <= b for a, b in zip(m, n))


def deg_join(m, n):
    return tuple(max(a, b) for a, b in zip(m, n))


def deg_total(m):
    return sum(m)


def deg_diag(k, n):
    return (n,) * k


# ---------------------------------------------------------------------------
# skeleton data


@dataclass(frozen=True)
class Edge:
    eid: str
    color: int  # 1-based
    source: str
    range: str

    def __repr__(self):
        return f"Edge({self.eid})"


@dataclass(frozen=True)
class Square:
    """a.b = c.d with color(a) < color(b), color(c) = color(b), color(d) = color(a)."""

    left: tuple  # (a_id, b_id)
    right: tuple  # (c_id, d_id)


@dataclass(frozen=True)
class Path:
    """A morphism in color-sorted canonical form.

    ``edges`` is a tuple of edge ids; ``range`` disambiguates degree-0
    paths (vertices).  Construct via KGraph.path / KGraph.vertex_path so
    the canonical form is guaranteed.
    """

    range: str
    edges: tuple
    degree: tuple

    @property
    def is_vertex(self):
        return not self.edges

    def __repr__(self):
        if self.is_vertex:
            return f"Path<{self.range}>"
        return "Path<" + ".".join(self.edges) + ">"


class KGraph:
    """Validated finite k-graph. Immutable after construction."""

    def __init__(self, k, vertices, edges, squares, enum_cap=24, name=""):
        self.k = k
        self.vertices = list(vertices)
        self.edges = list(edges)
        self.squares = list(squares)
        self.enum_cap = enum_cap
        self.name = name
        self.edge_by_id = {e.eid: e for e in self.edges}
        self._vertex_index = {v: i for i, v in enumerate(self.vertices)}
        # edges grouped by (range, color), declaration order
        self._by_range = {}
        for e in self.edges:
            self._by_range.setdefault((e.range, e.color), []).append(e)
        # square lookup tables keyed by edge-id pairs
        self._left_to_right = {}
        self._right_to_left = {}
        for sq in self.squares:
            self._left_to_right[sq.left] = sq.right
            self._right_to_left[sq.right] = sq.left
        self._path_cache = {}

    # -- basic accessors ----------------------------------------------------

    def vertex_path(self, v):
        if v not in self._vertex_index:
            raise KeyError(v)
        return Path(v, (), deg_zero(self.k))

    def edge_path(self, eid):
        e = self.edge_by_id[eid]
        return Path(e.range, (eid,), deg_unit(self.k, e.color))

    def path(self, edge_ids):
        """Build a path from a composable edge-id sequence (any color order)."""
        ids = tuple(edge_ids)
        if not ids:
            raise ValueError("use vertex_path for degree-0 paths")
        for a, b in zip(ids, ids[1:]):
            if self.edge_by_id[a].source != self.edge_by_id[b].range:
                raise NotComposable(f"{a} . {b}")
        canon = self._canonicalize(ids)
        deg = [0] * self.k
        for eid in canon:
            deg[self.edge_by_id[eid].color - 1] += 1
        return Path(self.edge_by_id[canon[0]].range, canon, tuple(deg))

    def r(self, p):
        return p.range

    def s(self, p):
        if p.is_vertex:
            return p.range
        return self.edge_by_id[p.edges[-1]].source

    def edges_from(self, v, color):
        """Edges with range v of the given color, in declaration order."""
        return self._by_range.get((v, color), [])

    # -- canonical form -----------------------------------------------------

    def _swap_pair(self, a_id, b_id):
        """Rewrite the adjacent pair a.b through the square table."""
        ca = self.edge_by_id[a_id].color
        cb = self.edge_by_id[b_id].color
        if ca < cb:
            return self._left_to_right[(a_id, b_id)]
        if ca > cb:
            return self._right_to_left[(a_id, b_id)]
        raise ValueError("cannot swap a same-color pair")

    def _canonicalize(self, ids):
        """Bubble edges into color-sorted order, leftmost inversion first."""
        out = list(ids)
        changed = True
        while changed:
            changed = False
            for t in range(len(out) - 1):
                ca = self.edge_by_id[out[t]].color
                cb = self.edge_by_id[out[t + 1]].color
                if ca > cb:
                    out[t], out[t + 1] = self._swap_pair(out[t], out[t + 1])
                    changed = True
                    break
        return tuple(out)

    # -- composition and factorization ---------------------------------------

    def compose(self, p, q):
        """Canonical form of pq; requires s(p) = r(q)."""
        if self.s(p) != q.range:
            raise NotComposable(f"s({p}) = {self.s(p)} != r({q}) = {q.range}")
        if p.is_vertex:
            return q
        if q.is_vertex:
            return p
        canon = self._canonicalize(p.edges + q.edges)
        return Path(p.range, canon, deg_add(p.degree, q.degree))

    def _pop_color(self, ids, color):
        """Bubble the first edge of the given color to the front and pop it."""
        ids = list(ids)
        t = next(i for i, eid in enumerate(ids) if self.edge_by_id[eid].color == color)
        while t > 0:
            ids[t - 1], ids[t] = self._swap_pair(ids[t - 1], ids[t])
            t -= 1
        return ids[0], ids[1:]

    def factorize(self, p, m):
        """Unique (head, tail) with p = head.tail and d(head) = m."""
        if not (deg_le(deg_zero(self.k), m) and deg_le(m, p.degree)):
            raise DegreeOutOfRange(f"m = {m} not within 0..{p.degree}")
        rest = list(p.edges)
        head = []
        for color in range(1, self.k + 1):
            for _ in range(m[color - 1]):
                ed, rest = self._pop_color(rest, color)
                head.append(ed)
        head_path = self.path(head) if head else self.vertex_path(p.range)
        if rest:
            tail_path = self.path(rest)
        else:
            tail_path = self.vertex_path(self.s(p))
        return head_path, tail_path

    def segment(self, p, m, n):
        """p(m, n) = the factor of p between degrees m and n."""
        _, tail = self.factorize(p, m)
        head, _ = self.factorize(tail, deg_sub(n, m))
        return head

    # -- enumeration ----------------------------------------------------------

    def enumerate_paths(self, n, v=None):
        """All paths of degree n (with range v if given), lexicographic order.

        Order follows edge declaration order within each color block.
        """
        if deg_total(n) > self.enum_cap:
            raise DegreeCapExceeded(f"|{n}| exceeds cap {self.enum_cap}")
        key = (n, v)
        if key in self._path_cache:
            return self._path_cache[key]
        roots = [v] if v is not None else list(self.vertices)
        colors = []
        for color in range(1, self.k + 1):
            colors.extend([color] * n[color - 1])
        out = []
        for root in roots:
            if not colors:
                out.append(self.vertex_path(root))
                continue
            stack = [(root, [])]
            while stack:
                cur, acc = stack.pop()
                depth = len(acc)
                if depth == len(colors):
                    out.append(Path(root, tuple(acc), n))
                    continue
                for e in reversed(self.edges_from(cur, colors[depth])):
                    stack.append((e.source, acc + [e.eid]))
        self._path_cache[key] = out
        return out

    def paths_with_source(self, n, v):
        """All paths of degree n and source v (cached filter)."""
        return [p for p in self.enumerate_paths(n) if self.s(p) == v]

    def lambda_min(self, p, q):
        """Minimal common extensions: pairs (rho, xi) with p.rho = q.xi."""
        if p.range != q.range:
            return []
        j = deg_join(p.degree, q.degree)
        out = []
        for rho in self.enumerate_paths(deg_sub(j, p.degree), self.s(p)):
            z = self.compose(p, rho)
            head, xi = self.factorize(z, q.degree)
            if head == q:
                out.append((rho, xi))
        return out

    # -- vertex matrices ------------------------------------------------------

    def vertex_matrices(self):
        """Integer matrices A_i with A_i[v][w] = #(edges of color i from w to v)."""
        mats = []
        nv = len(self.vertices)
        for color in range(1, self.k + 1):
            mat = [[0] * nv for _ in range(nv)]
            for e in self.edges:
                if e.color == color:
                    mat[self._vertex_index[e.range]][self._vertex_index[e.source]] += 1
            mats.append(mat)
        return mats

    def is_strongly_connected(self):
        nv = len(self.vertices)
        reach = [[False] * nv for _ in range(nv)]
        for e in self.edges:
            reach[self._vertex_index[e.range]][self._vertex_index[e.source]] = True
        for i in range(nv):
            reach[i][i] = True
        for m in range(nv):
            for i in range(nv):
                if reach[i][m]:
                    row_m = reach[m]
                    row_i = reach[i]
                    for j in range(nv):
                        if row_m[j]:
                            row_i[j] = True
        return all(all(row) for row in reach)

    # -- periodicity probe ----------------------------------------------------

    def periodicity_probe(self, v, depth):
        """Finite-depth shift-separation probe at vertex v.

        Compares sigma^m and sigma^n on all degree-(depth,...,depth)
        prefixes for every pair m != n whose common window is nonempty.
        Returns an AperiodicWitness, a PeriodCandidate (differences m - n
        that coincide on every prefix), or Inconclusive.
        """
        dd = deg_diag(self.k, depth)
        grid = list(itertools.product(range(depth + 1), repeat=self.k))
        pairs = []
        for m in grid:
            for n in grid:
                if m == n or m < n:
                    continue
                w = deg_sub(dd, deg_join(m, n))
                if all(c >= 1 for c in w):
                    pairs.append((m, n, w))
        if not pairs:
            raise DepthTooSmall(f"depth {depth} separates no shift pair")
        prefixes = self.enumerate_paths(dd, v)
        agree = {}  # (m, n) -> True if windows agree on all prefixes so far
        for m, n, w in pairs:
            agree[(m, n)] = True
        full_witness = None
        for p in prefixes:
            all_differ = True
            for m, n, w in pairs:
                wm = self.segment(p, m, deg_add(m, w))
                wn = self.segment(p, n, deg_add(n, w))
                if wm == wn:
                    all_differ = False
                else:
                    agree[(m, n)] = False
            if all_differ and full_witness is None:
                full_witness = p
        diffs = {}
        for (m, n), still in agree.items():
            if still:
                diffs.setdefault(deg_sub(m, n), []).append((m, n))
        # a difference is a candidate only if every pair realizing it agreed
        candidates = sorted(
            d
            for d, realized in diffs.items()
            if all(agree[(m, n)] for (m, n) in realized)
        )
        if candidates:
            return PeriodCandidate(tuple(candidates))
        if full_witness is not None:
            return AperiodicWitness(full_witness, dd)
        return Inconclusive()


@dataclass(frozen=True)
class AperiodicWitness:
    prefix: Path
    checked_up_to: tuple


@dataclass(frozen=True)
class PeriodCandidate:
    differences: tuple  # all m - n that agree on every enumerated prefix


@dataclass(frozen=True)
class Inconclusive:
    pass


# ---------------------------------------------------------------------------
# validation


def validate_kgraph(k, vertices, edges, squares, enum_cap=24, name=""):
    """Check the skeleton + squares present a k-graph; return the KGraph.

    Verifies endpoints, the per-color-pair square bijection, the cube
    condition when k >= 3, and source-freeness.
    """
    vertices = list(vertices)
    vset = set(vertices)
    if len(vset) != len(vertices):
        raise InvalidSquare(None, "duplicate vertex ids")
    edge_by_id = {}
    for e in edges:
        if e.eid in edge_by_id:
            raise InvalidSquare(None, f"duplicate edge id {e.eid!r}")
        if not 1 <= e.color <= k:
            raise InvalidSquare(None, f"edge {e.eid!r} color {e.color} outside 1..{k}")
        if e.source not in vset:
            raise DanglingEndpoint(e.eid, e.source)
        if e.range not in vset:
            raise DanglingEndpoint(e.eid, e.range)
        edge_by_id[e.eid] = e

    # squares: shape and endpoint compatibility
    for sq in squares:
        a, b = (edge_by_id.get(x) for x in sq.left)
        c, d = (edge_by_id.get(x) for x in sq.right)
        if None in (a, b, c, d):
            raise InvalidSquare(sq, "unknown edge id")
        if not (a.color < b.color):
            raise InvalidSquare(sq, "left pair must be (lower color, higher color)")
        if not (c.color == b.color and d.color == a.color):
            raise InvalidSquare(sq, "right pair must swap the left colors")
        if a.source != b.range:
            raise InvalidSquare(sq, "left pair not composable")
        if c.source != d.range:
            raise InvalidSquare(sq, "right pair not composable")
        if c.range != a.range or d.source != b.source:
            raise InvalidSquare(sq, "right pair endpoints differ from left pair")

    # bijection per color pair
    for ci, cj in itertools.combinations(range(1, k + 1), 2):
        left_pairs = {
            (a.eid, b.eid)
            for a in edges
            if a.color == ci
            for b in edges
            if b.color == cj and a.source == b.range
        }
        right_pairs = {
            (c.eid, d.eid)
            for c in edges
            if c.color == cj
            for d in edges
            if d.color == ci and c.source == d.range
        }
        seen_left, seen_right = set(), set()
        for sq in squares:
            a, b = sq.left
            if edge_by_id[a].color != ci or edge_by_id[b].color != cj:
                continue
            if sq.left in seen_left:
                raise SquareNotBijective(sq.left, "doubly-covered")
            if sq.right in seen_right:
                raise SquareNotBijective(sq.right, "doubly-covered")
            seen_left.add(sq.left)
            seen_right.add(sq.right)
        for pair in sorted(left_pairs - seen_left):
            raise SquareNotBijective(pair, "uncovered")
        for pair in sorted(right_pairs - seen_right):
            raise SquareNotBijective(pair, "uncovered")

    # source-freeness
    received = {(v, c): False for v in vertices for c in range(1, k + 1)}
    for e in edges:
        received[(e.range, e.color)] = True
    for (v, c), ok in received.items():
        if not ok:
            raise SourceVertex(v, c)

    g = KGraph(k, vertices, edges, squares, enum_cap=enum_cap, name=name)

    # cube condition: both reordering routes agree on color-descending triples
    if k >= 3:
        for e1 in edges:
            for e2 in edges:
                if e2.range != e1.source or e2.color >= e1.color:
                    continue
                for e3 in edges:
                    if e3.range != e2.source or e3.color >= e2.color:
                        continue
                    route1 = _route(g, (e1.eid, e2.eid, e3.eid), (0, 1, 0))
                    route2 = _route(g, (e1.eid, e2.eid, e3.eid), (1, 0, 1))
                    if route1 != route2:
                        raise CubeConditionFailed((e1.eid, e2.eid, e3.eid))

    # sanity: the square bijection forces commuting vertex matrices
    mats = g.vertex_matrices()
    for i in range(k):
        for j in range(i + 1, k):
            if _matmul(mats[i], mats[j]) != _matmul(mats[j], mats[i]):
                raise SquareNotBijective((i + 1, j + 1), "matrices do not commute")
    return g


def _route(g, triple, swaps):
    out = list(triple)
    for pos in swaps:
        out[pos], out[pos + 1] = g._swap_pair(out[pos], out[pos + 1])
    return tuple(out)


def _matmul(a, b):
    n = len(a)
    return [
        [sum(a[i][t] * b[t][j] for t in range(n)) for j in range(n)] for i in range(n)
    ]


# ---------------------------------------------------------------------------
# constructions


def build_double(e_graph):
    """Double 2-graph of a 1-graph: two copies of each edge, trivial squares."""
    if e_graph.k != 1:
        raise ValueError("double graph is defined for 1-graphs")
    edges = []
    for copy in (1, 2):
        for e in e_graph.edges:
            edges.append(Edge(f"{e.eid}^{copy}", copy, e.source, e.range))
    squares = []
    for a in e_graph.edges:
        for b in e_graph.edges:
            if a.source == b.range:
                squares.append(
                    Square((f"{a.eid}^1", f"{b.eid}^2"), (f"{a.eid}^2", f"{b.eid}^1"))
                )
    return validate_kgraph(
        2,
        e_graph.vertices,
        edges,
        squares,
        enum_cap=e_graph.enum_cap,
        name=f"double({e_graph.name})",
    )


def build_product(g1, g2):
    """Product (k1+k2)-graph on vertex pairs, with per-factor lifted squares."""
    k = g1.k + g2.k
    vertices = [f"({v},{w})" for v in g1.vertices for w in g2.vertices]

    def vx(v, w):
        return f"({v},{w})"

    edges = []
    for e in g1.edges:
        for w in g2.vertices:
            edges.append(
                Edge(f"{e.eid}@1[{w}]", e.color, vx(e.source, w), vx(e.range, w))
            )
    for f in g2.edges:
        for v in g1.vertices:
            edges.append(
                Edge(f"{f.eid}@2[{v}]", g1.k + f.color, vx(v, f.source), vx(v, f.range))
            )
    squares = []
    # squares internal to factor 1, at each vertex of factor 2
    for sq in g1.squares:
        for w in g2.vertices:
            squares.append(
                Square(
                    tuple(f"{x}@1[{w}]" for x in sq.left),
                    tuple(f"{x}@1[{w}]" for x in sq.right),
                )
            )
    # squares internal to factor 2, at each vertex of factor 1
    for sq in g2.squares:
        for v in g1.vertices:
            squares.append(
                Square(
                    tuple(f"{x}@2[{v}]" for x in sq.left),
                    tuple(f"{x}@2[{v}]" for x in sq.right),
                )
            )
    # mixed squares: lam@1 . eta@2 = eta@2 . lam@1
    for lam in g1.edges:
        for eta in g2.edges:
            left = (f"{lam.eid}@1[{eta.range}]", f"{eta.eid}@2[{lam.source}]")
            right = (f"{eta.eid}@2[{lam.range}]", f"{lam.eid}@1[{eta.source}]")
            squares.append(Square(left, right))
    return validate_kgraph(
        k,
        vertices,
        edges,
        squares,
        enum_cap=max(g1.enum_cap, g2.enum_cap),
        name=f"product({g1.name},{g2.name})",
    )


def build_lambda2N(n_half, perm, enum_cap=24):
    """2-graph with center v and peripherals Q1..Q_{2N}; factorization by perm.

    perm maps i -> perm[i-1] (1-based images): the blue-red loop through
    Q_{perm(i)} equals the red-blue loop through Q_i.
    """
    two_n = 2 * n_half
    if sorted(perm) != list(range(1, two_n + 1)):
        raise InvalidPermutation(f"{perm} is not a bijection of 1..{two_n}")
    vertices = ["v"] + [f"Q{i}" for i in range(1, two_n + 1)]
    edges = []
    for color, tag in ((1, "b"), (2, "r")):
        for i in range(1, two_n + 1):
            edges.append(Edge(f"{tag}_in_{i}", color, f"Q{i}", "v"))
            edges.append(Edge(f"{tag}_out_{i}", color, "v", f"Q{i}"))
    squares = []
    # loops at v: blue-red through Q_{perm(i)} = red-blue through Q_i
    for i in range(1, two_n + 1):
        j = perm[i - 1]
        squares.append(Square((f"b_in_{j}", f"r_out_{j}"), (f"r_in_{i}", f"b_out_{i}")))
    # paths Q_i <- v <- Q_j: the unique bi-colored pair in each order
    for i in range(1, two_n + 1):
        for j in range(1, two_n + 1):
            squares.append(
                Square((f"b_out_{i}", f"r_in_{j}"), (f"r_out_{i}", f"b_in_{j}"))
            )
    return validate_kgraph(
        2, vertices, edges, squares, enum_cap=enum_cap, name=f"lambda{two_n}"
    )


# ---------------------------------------------------------------------------
# JSON skeleton format and dot export


def graph_to_dict(g):
    return {
        "k": g.k,
        "vertices": list(g.vertices),
        "edges": [
            {"id": e.eid, "color": e.color, "source": e.source, "range": e.range}
            for e in g.edges
        ],
        "squares": [
            {"left": list(sq.left), "right": list(sq.right)} for sq in g.squares
        ],
    }


def graph_from_dict(data, enum_cap=24, name=""):
    edges = [
        Edge(e["id"], int(e["color"]), e["source"], e["range"])
        for e in data["edges"]
    ]
    squares = [Square(tuple(s["left"]), tuple(s["right"])) for s in data["squares"]]
    return validate_kgraph(
        int(data["k"]), data["vertices"], edges, squares, enum_cap=enum_cap, name=name
    )


def load_graph(path_or_file, enum_cap=24, name=""):
    if hasattr(path_or_file, "read"):
        data = json.load(path_or_file)
    else:
        with open(path_or_file) as fh:
            data = json.load(fh)
    return graph_from_dict(data, enum_cap=enum_cap, name=name)


_DOT_PALETTE = ["blue", "red", "forestgreen", "orange", "purple", "brown"]


def to_dot(g):
    lines = ["digraph skeleton {"]
    for v in g.vertices:
        lines.append(f'  "{v}";')
    for e in g.edges:
        color = _DOT_PALETTE[(e.color - 1) % len(_DOT_PALETTE)]
        style = "solid" if e.color == 1 else "dashed"
        lines.append(
            f'  "{e.source}" -> "{e.range}" '
            f'[label="{e.eid}", color={color}, style={style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
