"""Decomposition of sparse semidefinite blocks into clique-sized pieces.

A slack matrix mat(b - Ax) that must be PSD while the data rows only touch a
sparse symmetric pattern splits, after chordal completion of that pattern,
into one small PSD block per clique: the matrix is PSD with that support
exactly when it is a sum of PSD matrices embedded at the clique index sets.
Entries covered by several cliques get one free variable per covering clique
plus a single equality row tying their sum to the original data row; entries
covered once keep their data row directly. Clique duals agree on overlaps at
optimality, so the original dual block is recovered by averaging and the
primal slack by summing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones.psd import _tri_indices, svec_dim, svec_index
from .model import PSD, ZERO, ConeSpec, ProblemData, Settings, SolveResult


# ------------------------------------------------------------ pattern

def aggregate_pattern(A, b, row0, side):
    """Adjacency sets of the entries touched by rows [row0, row0 + tri(side)).

    Diagonal positions are always included so every vertex appears.
    """
    t = svec_dim(side)
    nz = np.zeros(t, dtype=bool)
    A = A.tocsc() if not sp.issparse(A) else A
    sub = A[row0:row0 + t].tocoo()
    nz[np.unique(sub.row[sub.data != 0.0])] = True
    nz[b[row0:row0 + t] != 0.0] = True
    rows, cols, _ = _tri_indices(side)
    adj = [set() for _ in range(side)]
    for i, j in zip(rows[nz], cols[nz]):
        if i != j:
            adj[i].add(int(j))
            adj[j].add(int(i))
    return adj, nz


def pattern_is_dense(adj):
    n = len(adj)
    return all(len(a) == n - 1 for a in adj)


# ------------------------------------------------------------ completion

def _symbolic_factor(adj):
    """Greedy minimum-degree elimination.

    Returns the elimination order and the filled adjacency (original plus
    fill edges), which is chordal with the order as a perfect elimination
    ordering. Ties break toward the lowest vertex index.
    """
    n = len(adj)
    filled = [set(a) for a in adj]
    alive = set(range(n))
    order = []
    for _ in range(n):
        v = min(alive, key=lambda u: (len(filled[u] & alive), u))
        order.append(v)
        alive.discard(v)
        nb = sorted(filled[v] & alive)
        for ai, u in enumerate(nb):
            for w in nb[ai + 1:]:
                if w not in filled[u]:
                    filled[u].add(w)
                    filled[w].add(u)
    return order, filled


def _maximal_cliques(order, filled):
    pos = {v: k for k, v in enumerate(order)}
    cands = []
    for v in order:
        c = {v} | {u for u in filled[v] if pos[u] > pos[v]}
        cands.append(frozenset(c))
    return _dedupe(cands)


def _dedupe(cliques):
    """Drop cliques contained in another; deterministic output order."""
    sets = sorted({frozenset(c) for c in cliques}, key=len, reverse=True)
    kept = []
    for c in sets:
        if not any(c < k for k in kept) and c not in kept:
            kept.append(c)
    kept.sort(key=lambda c: (min(c), len(c), sorted(c)))
    return [set(c) for c in kept]


def chordal_completion(adj):
    """(filled adjacency, maximal cliques, clique-tree parents)."""
    order, filled = _symbolic_factor(adj)
    cliques = _maximal_cliques(order, filled)
    return filled, cliques, clique_tree(cliques)


def clique_tree(cliques):
    """Maximum-overlap spanning tree (Prim); carries running intersection."""
    L = len(cliques)
    parent = [-1] * L
    if L <= 1:
        return parent
    in_tree = [False] * L
    in_tree[0] = True
    for _ in range(L - 1):
        best = None
        for j in range(L):
            if in_tree[j]:
                continue
            for i in range(L):
                if not in_tree[i]:
                    continue
                w = len(cliques[i] & cliques[j])
                if best is None or w > best[0]:
                    best = (w, i, j)
        _, i, j = best
        parent[j] = i
        in_tree[j] = True
    return parent


# ------------------------------------------------------------ merging

def merge_parent_child(cliques, parent, fill_limit, overlap_ratio):
    """Single bottom-up sweep merging children into parents.

    A child is absorbed when it is contained in its parent, when the fill-in
    of the union |p \\ c| * |c \\ p| stays within fill_limit, or when the
    overlap covers at least overlap_ratio of the smaller clique.
    """
    cl = [set(c) for c in cliques]
    target = list(range(len(cl)))

    def find(i):
        while target[i] != i:
            i = target[i]
        return i

    def depth(i):
        d = 0
        while parent[i] != -1:
            i = parent[i]
            d += 1
        return d

    merges = 0
    for c in sorted(range(len(cl)), key=lambda i: (-depth(i), i)):
        if parent[c] == -1:
            continue
        p, c0 = find(parent[c]), find(c)
        if p == c0:
            continue
        ov = len(cl[c0] & cl[p])
        fill = (len(cl[p]) - ov) * (len(cl[c0]) - ov)
        if (cl[c0] <= cl[p] or fill <= fill_limit
                or ov >= overlap_ratio * min(len(cl[c0]), len(cl[p]))):
            cl[p] |= cl[c0]
            target[c0] = p
            merges += 1
    out = [cl[i] for i in range(len(cl)) if find(i) == i]
    return _dedupe(out), merges


def merge_clique_graph(cliques):
    """Greedy merge of the heaviest positive clique-graph edge.

    Edge weight |Ci|^3 + |Cj|^3 - |Ci u Cj|^3 trades two small PSD blocks
    against one larger one; only intersecting cliques are adjacent. Weights
    are recomputed after every merge; ties keep the lowest index pair.
    """
    cl = [set(c) for c in cliques]
    merges = 0
    while True:
        best = None
        for i in range(len(cl)):
            for j in range(i + 1, len(cl)):
                if not cl[i] & cl[j]:
                    continue
                w = len(cl[i]) ** 3 + len(cl[j]) ** 3 - len(cl[i] | cl[j]) ** 3
                if w > 0 and (best is None or w > best[0]):
                    best = (w, i, j)
        if best is None:
            break
        _, i, j = best
        cl[i] |= cl[j]
        del cl[j]
        merges += 1
    return _dedupe(cl), merges


def clique_cover(adj, settings: Settings):
    """Chordal completion plus the configured merge pass."""
    _, cliques, parent = chordal_completion(adj)
    if settings.merge_strategy == "parent_child":
        return merge_parent_child(cliques, parent, settings.merge_fill_limit,
                                  settings.merge_overlap_ratio)
    if settings.merge_strategy == "clique_graph":
        return merge_clique_graph(cliques)
    return cliques, 0


# ------------------------------------------------------------ conversion

@dataclass
class BlockPlan:
    """Bookkeeping for one decomposed PSDTriangle block."""

    cone_index: int
    row0: int            # first row of the block in the original problem
    side: int
    pattern: np.ndarray  # svec-length bool mask of data support
    cliques: list = field(default_factory=list)
    merges: int = 0
    mult: np.ndarray = None          # how many cliques cover each svec entry
    entry_rows: list = field(default_factory=list)  # per clique: new row ids
    entry_keys: list = field(default_factory=list)  # per clique: global svec k
    link_rows: dict = field(default_factory=dict)   # global k -> new row id


@dataclass
class DecompositionMap:
    n: int
    m: int
    plans: list
    s_map: sp.csr_matrix    # original s  =  s_map @ decomposed s
    z_map: sp.csr_matrix    # original z  =  z_map @ decomposed z
    report: str


def _clique_entries(clique, side):
    """Global svec indices of a clique's entries, in local svec order."""
    K = np.asarray(sorted(clique), dtype=int)
    nl = K.size
    rows, cols, _ = _tri_indices(nl)
    return K, svec_index(K[rows], K[cols], side)


def decompose(data: ProblemData, settings: Settings = None):
    """Split large sparse PSD blocks along their clique structure.

    Returns (transformed problem, DecompositionMap) or (data, None) when no
    block is worth decomposing. The transformed problem appends one free
    variable per (shared entry, covering clique) and one Zero-cone row per
    shared entry; all other blocks pass through in order.
    """
    settings = settings or Settings()
    plans = []
    row0 = 0
    for ci, spec in enumerate(data.cones):
        if spec.kind == PSD and spec.dim >= settings.min_decompose_side:
            adj, nz = aggregate_pattern(data.A, data.b, row0, spec.dim)
            if not pattern_is_dense(adj):
                cliques, merges = clique_cover(adj, settings)
                if len(cliques) > 1:
                    plans.append(BlockPlan(ci, row0, spec.dim, nz,
                                           cliques=cliques, merges=merges))
        row0 += spec.rows
    if not plans:
        return data, None

    A = data.A.tocsr()
    A.eliminate_zeros()
    planned = {p.cone_index: p for p in plans}

    n = data.n
    new_cones = []
    # triplets for the new A; u-columns are indexed n, n+1, ...
    ai, aj, av = [], [], []
    b_new = []
    smi, smj, smv = [], [], []   # s_map triplets (original row, new row, 1)
    zmi, zmj, zmv = [], [], []
    links = []                   # deferred (plan, global k, covering cliques)
    u_col = {}
    r = 0                        # rows emitted so far
    row0 = 0

    def copy_row(orig_row, new_row):
        lo, hi = A.indptr[orig_row], A.indptr[orig_row + 1]
        ai.extend([new_row] * (hi - lo))
        aj.extend(A.indices[lo:hi].tolist())
        av.extend(A.data[lo:hi].tolist())
        b_new.append(float(data.b[orig_row]))

    for ci, spec in enumerate(data.cones):
        plan = planned.get(ci)
        if plan is None:
            for k in range(spec.rows):
                copy_row(row0 + k, r + k)
                smi.append(row0 + k); smj.append(r + k); smv.append(1.0)
                zmi.append(row0 + k); zmj.append(r + k); zmv.append(1.0)
            new_cones.append(spec)
            r += spec.rows
            row0 += spec.rows
            continue

        side = plan.side
        mult = np.zeros(svec_dim(side), dtype=int)
        entries = []
        for cl in plan.cliques:
            K, keys = _clique_entries(cl, side)
            entries.append(keys)
            mult[keys] += 1
        plan.mult = mult
        shared = np.flatnonzero(mult >= 2)
        for k in shared:
            for li, keys in enumerate(entries):
                if k in keys:
                    u_col[(ci, int(k), li)] = n + len(u_col)
        for li, (cl, keys) in enumerate(zip(plan.cliques, entries)):
            new_rows = np.arange(r, r + keys.size)
            plan.entry_rows.append(new_rows)
            plan.entry_keys.append(keys)
            for t, k in enumerate(keys):
                k = int(k)
                if mult[k] == 1:
                    copy_row(row0 + k, r + t)   # zero row if k is fill
                    if plan.pattern[k]:
                        smi.append(row0 + k); smj.append(r + t); smv.append(1.0)
                else:
                    ai.append(r + t); aj.append(u_col[(ci, k, li)]); av.append(-1.0)
                    b_new.append(0.0)
                    if plan.pattern[k]:
                        smi.append(row0 + k); smj.append(r + t); smv.append(1.0)
                zmi.append(row0 + k); zmj.append(r + t)
                zmv.append(1.0 / mult[k])
            new_cones.append(ConeSpec(PSD, len(cl)))
            r += keys.size
        for k in shared:
            links.append((plan, int(k), row0 + int(k)))
        row0 += spec.rows

    # one Zero block at the end collects every linking equality
    for plan, k, orig_row in links:
        copy_row(orig_row, r)
        for li in range(len(plan.cliques)):
            key = (plan.cone_index, k, li)
            if key in u_col:
                ai.append(r); aj.append(u_col[key]); av.append(1.0)
        plan.link_rows[k] = r
        r += 1
    if links:
        new_cones.append(ConeSpec(ZERO, len(links)))

    n_new = n + len(u_col)
    A_new = sp.coo_matrix((av, (ai, aj)), shape=(r, n_new)).tocsc()
    P_new = sp.block_diag(
        (data.P, sp.csc_matrix((len(u_col), len(u_col)))), format="csc")
    q_new = np.concatenate([data.q, np.zeros(len(u_col))])
    out = ProblemData(P=P_new, q=q_new, A=A_new, b=np.asarray(b_new),
                      cones=tuple(new_cones), obj_offset=data.obj_offset)
    dmap = DecompositionMap(
        n=n, m=data.m, plans=plans,
        s_map=sp.coo_matrix((smv, (smi, smj)), shape=(data.m, r)).tocsr(),
        z_map=sp.coo_matrix((zmv, (zmi, zmj)), shape=(data.m, r)).tocsr(),
        report=_report(data, plans, len(links), len(u_col)),
    )
    return out, dmap


def recover(result: SolveResult, dmap: DecompositionMap) -> SolveResult:
    """Map a decomposed solve back to the original coordinates.

    The primal slack sums the clique blocks into the aggregate pattern
    (off-pattern entries stay zero); the dual averages the clique copies,
    which coincide at optimality. Objectives are untouched: the x part and
    its cost are identical and the helper variables are costless.
    """
    info = dict(result.info)
    info["chordal"] = dmap.report
    return SolveResult(
        status=result.status,
        x=result.x[:dmap.n],
        s=dmap.s_map @ result.s,
        z=dmap.z_map @ result.z,
        obj_primal=result.obj_primal,
        obj_dual=result.obj_dual,
        iterations=result.iterations,
        solve_time=result.solve_time,
        info=info,
    )


def _report(data, plans, n_links, n_vars):
    lines = []
    for p in plans:
        sizes = " ".join(str(len(c)) for c in p.cliques)
        lines.append(
            f"psd block {p.cone_index}: side {p.side}, "
            f"pattern nnz {int(p.pattern.sum())}/{svec_dim(p.side)}, "
            f"cliques {len(p.cliques)} (sizes {sizes}), merges {p.merges}")
    lines.append(f"linking rows {n_links}, helper variables {n_vars}")
    return "\n".join(lines)
