"""Combinatorial labeled systems and their export as inverse sequences."""

from __future__ import annotations

import numpy as np

from ..metric import FiniteCompactum
from ..inverse import Disk, HatSpace, JakobscheSequence, balls, bond, build_extended
from ..labels import Alphabet, LabeledSystem, LabelError, Promise, unit_system
from ..tree import Tree


def gen_labeled(tree: Tree, labels, alphabet: Alphabet, promises, signs=None, interior: int = 2) -> LabeledSystem:
    """Unit-metric labeled system over ``tree``.

    ``promises`` maps every stub to a :class:`Promise` or to a
    ``(first, beyond)`` pair.  Oriented alphabets need a sign per internal
    edge; by default every connector preserves orientation.
    """
    if not isinstance(alphabet, Alphabet):
        alphabet = Alphabet(tuple(alphabet))
    promises = {z: p if isinstance(p, Promise) else Promise(p[0], frozenset(p[1])) for z, p in dict(promises).items()}
    if alphabet.orientation == "oriented" and signs is None:
        signs = {e: 1 for e in tree.internal_edges()}
    L = LabeledSystem(unit_system(tree, labels, interior), alphabet, promises, signs)
    rep = L.validate()
    if not rep.ok:
        raise LabelError(rep.violations[0].detail)
    missing = [z for z in tree.stubs if z not in promises]
    if missing:
        raise LabelError(f"stubs {sorted(missing)} have no label promise")
    return L


def labeled_path(n: int, alphabet=(1, 2), stubs: int = 1) -> LabeledSystem:
    """Path with labels cycling through the alphabet.

    Every vertex carries ``stubs`` stubs promising the whole alphabet, the
    first label beyond each being the next one in the cycle.
    """
    k = len(alphabet)
    links = [(i, i + 1) for i in range(n - 1)]
    anchors = [v for v in range(n) for _ in range(stubs)]
    tree = Tree.build(range(n), links, anchors)
    labels = {v: alphabet[v % k] for v in range(n)}
    full = frozenset(alphabet)
    promises = {}
    for j, z in enumerate(sorted(tree.stubs)):
        v = anchors[j]
        promises[z] = Promise(alphabet[(v + 1) % k], full)
    return gen_labeled(tree, labels, Alphabet(tuple(alphabet)), promises)


def complete_labeled(alphabet=(1, 2), per_label: int = 2, depth: int = 3, root_label=None) -> LabeledSystem:
    """Rooted tree where every vertex has ``per_label`` children of each label.

    Vertices at ``depth`` carry the same pattern as stubs, each promising the
    whole alphabet.  The result is 2-saturated when ``per_label >= 2``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    alphabet = tuple(alphabet)
    root_label = alphabet[0] if root_label is None else root_label
    labels, links, stub_at, stub_first = {0: root_label}, [], [], []
    frontier = [0]
    for d in range(depth + 1):
        nxt = []
        for v in frontier:
            for m in alphabet:
                for _ in range(per_label):
                    if d == depth:
                        stub_at.append(v)
                        stub_first.append(m)
                    else:
                        c = len(labels)
                        labels[c] = m
                        links.append((v, c))
                        nxt.append(c)
        frontier = nxt
    tree = Tree.build(sorted(labels), links, stub_at)
    full = frozenset(alphabet)
    base = 2 * len(links)
    promises = {base + j: Promise(m, full) for j, m in enumerate(stub_first)}
    return gen_labeled(tree, labels, Alphabet(alphabet), promises)


def export_sequence(L: LabeledSystem, radii=(0, 1, 2), root=None, levels: int = 3, shrink: float = 0.5, resolution: float | None = None) -> JakobscheSequence:
    """Balls around ``root`` as a weak Jakobsche sequence.

    Constituents shrink away from the root: at depth ``d`` the points facing
    the parent keep the parent's scale ``shrink ** (d - 1)`` while all other
    points sit at ``shrink ** d``, so gluing stays isometric and disks get
    small.  Level ``i`` is the conical extended space over the ``i``-th
    ball.  Its disks are the cones over the peripherals of internal edges
    leaving the ball, labeled by the label beyond; every such disk is
    expanded at the next level.  Stub cones cap their punctures but are never
    disks, since nothing is known to expand them.  Maps are the bonding maps
    of the bundle.

    The declared resolution defaults to a walking bound: in a 2-saturated
    system a point walks down the tree to a boundary disk of any label,
    crossing one constituent per depth, and each crossing costs at most the
    largest distance from a point of that constituent to a child peripheral.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    tree = L.tree
    _, parent, depth = tree.bfs(root)
    theta = L.system.copy(constituents={t: _shrunk(L.system, t, parent[t], depth[t], shrink) for t in tree.vertices})
    E = build_extended(theta, "conical", levels=levels)
    chain = balls(tree, radii, root)
    for a, b in zip(chain, chain[1:]):
        if not a < b:
            raise ValueError("radii must give strictly growing balls")
    spaces = [HatSpace(E, F) for F in chain]
    metrics = [S.metric() for S in spaces]
    maps = [bond(E, spaces[i + 1], spaces[i]) for i in range(len(spaces) - 1)]
    disks, origin = [], []
    for i, (F, S) in enumerate(zip(chain, spaces)):
        D: dict = {}
        for t in sorted(F):
            for e in tree.out_edges(t):
                if tree.is_stub(e) or tree.omega[e] in F:
                    continue
                M = L.labels[tree.omega[e]]
                pts = E.delta_points[e]
                nb = len(theta.peripherals[e])
                boundary = np.array([S.index[(t, int(j))] for j in pts[:nb]], dtype=np.intp)
                inner = np.array([S.index[(t, int(j))] for j in pts[nb:]], dtype=np.intp)
                D.setdefault(M, []).append(Disk(inner, boundary))
        disks.append(D)
        # cone points carry no label; glued peripheral points keep their canonical key's
        origin.append([None if j >= theta.constituents[t].n else L.labels[t] for t, j in S.keys])
    if resolution is None:
        resolution = _walk_bound(theta, chain[-1], parent, depth)
    base = L.labels[min(chain[0])]
    return JakobscheSequence(metrics, disks, maps, base, list(L.alphabet.names), origin, float(resolution), dense=theta.dense)



def _shrunk(theta, t, parent_edge, d, shrink):
    K = theta.constituents[t]
    b = shrink**d
    dist = np.full((K.n, K.n), b)
    if parent_edge is not None:
        a = shrink ** (d - 1)
        up = theta.peripherals[theta.tree.bar[parent_edge]]
        dist[up, :] = dist[:, up] = a / 2
        dist[np.ix_(up, up)] = a
    np.fill_diagonal(dist, 0.0)
    return FiniteCompactum(dist, ids=K.ids, resolution=b)


def _walk_bound(theta, F, parent, depth):
    tree = theta.tree
    step: dict[int, float] = {}
    for t in F:
        kids = [e for e in tree.out_edges(t) if not tree.is_stub(e) and e != (None if parent[t] is None else tree.bar[parent[t]])]
        if not kids:
            raise ValueError(f"vertex {t} has no children; density has no bound")
        K = theta.constituents[t]
        pts = np.concatenate([theta.peripherals[e] for e in kids])
        step[depth[t]] = max(step.get(depth[t], 0.0), float(K.dist[:, pts].min(axis=1).max()))
    return sum(step.values())
