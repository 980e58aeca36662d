"""Orbit of a right-angled fundamental domain under a free reflection group.

``k`` circles orthogonal to the unit circle bound pairwise disjoint round
disks.  The reflections in these circles generate a free product of
``k`` copies of Z/2; the fundamental domain is the closed unit disk minus
the open round disks.  Translates of the domain by reduced words of length
at most ``depth`` tile a neighbourhood of the domain, and the translates of
the bounding arcs form a tree decomposition of that sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..decomp import Decomposition, DecompositionError, Splitting, check_noncrossing
from ..metric import FiniteCompactum
from ..system import TreeSystem
from ..tree import Tree

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def reflect(self, z):
        """Inversion in the circle: an anticonformal isometry of the hyperbolic disk."""
        return self.center + self.radius**2 / np.conj(z - self.center)


def boundary_circles(k: int, half_angle: float | None = None) -> list[Circle]:
    """k circles orthogonal to the unit circle, evenly spaced.

    A circle seen under half-angle ``a`` from the origin has center at
    distance ``1/cos a`` and radius ``tan a``.
    """
    if k < 2:
        raise ValueError("need at least two boundary disks")
    a = half_angle if half_angle is not None else 0.6 * np.pi / k
    if not 0 < a < np.pi / 2:
        raise ValueError("half-angle out of range")
    if a >= np.pi / k:
        raise ValueError("boundary disks overlap")
    out = []
    for i in range(k):
        u = np.exp(2j * np.pi * i / k)
        c = Circle(u / np.cos(a), np.tan(a))
        # orthogonality to the unit circle: |c|^2 = 1 + r^2
        if abs(abs(c.center) ** 2 - 1 - c.radius**2) > ORTHO_TOL:
            raise ValueError("circle is not orthogonal to the unit circle")
        out.append(c)
    return out


def reduced_words(k: int, depth: int) -> list[tuple[int, ...]]:
    """Words without repeated consecutive letters, shortlex ordered."""
    words, frontier = [()], [()]
    for _ in range(depth):
        frontier = [w + (i,) for w in frontier for i in range(k) if not w or w[-1] != i]
        words.extend(frontier)
    return words


def apply_word(circles, word, z):
    """g_w(z) for g_w = s_{w_1} ... s_{w_n}, applied right to left."""
    z = np.asarray(z, dtype=complex)
    for i in reversed(word):
        z = circles[i].reflect(z)
    return z


def fundamental_samples(circles, spacing: float = 0.18, arc_points: int = 8, margin: float = 0.3):
    """Interior grid points of the domain and points on each bounding arc.

    Returns ``(interior, arcs)`` with ``arcs[i]`` the samples of arc ``i``
    ordered by angle.  Arc endpoints on the unit circle are left out.
    """
    g = np.arange(-1, 1 + 1e-12, spacing)
    zz = (g[:, None] + 1j * g[None, :]).ravel()
    keep = np.abs(zz) < 1 - margin * spacing
    for c in circles:
        keep &= np.abs(zz - c.center) > c.radius + margin * spacing
    interior = zz[keep]
    arcs = []
    for c in circles:
        # the arc inside the unit disk spans angles within pi/2 - a of the inward direction
        a = np.arctan(c.radius)
        inward = np.angle(-c.center)
        span = np.pi / 2 - a
        ts = inward + np.linspace(-span, span, arc_points + 2)[1:-1]
        arcs.append(c.center + c.radius * np.exp(1j * ts))
    return interior, arcs


@dataclass
class DiskModel:
    circles: list[Circle]
    words: list[tuple[int, ...]]
    cloud: FiniteCompactum  # Euclidean sample of the union of translates
    word_points: dict[tuple[int, ...], np.ndarray]  # cloud indices of g_w(domain)
    base: np.ndarray  # the sample of the fundamental domain, in local order
    decomposition: Decomposition
    template: TreeSystem
    orbit_counts: list[int]


def _fit_circle(z: np.ndarray):
    a, b, c = z[0], z[len(z) // 2], z[-1]
    # circumcenter of three points
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if abs(d) < 1e-14:
        raise DecompositionError("separator is a straight line")
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    center = complex(ux, uy)
    return center, abs(a - center)


def gen_reflection_disk(depth: int, k: int = 3, half_angle: float | None = None, spacing: float = 0.18, arc_points: int = 8) -> DiskModel:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    circles = boundary_circles(k, half_angle)
    interior, arcs = fundamental_samples(circles, spacing, arc_points)
    base = np.concatenate([interior] + arcs)
    n_int = len(interior)
    arc_slice = {}
    pos = n_int
    for i, a in enumerate(arcs):
        arc_slice[i] = np.arange(pos, pos + len(a))
        pos += len(a)
    words = reduced_words(k, depth)
    # a point on arc i of g_w(domain) is shared with g_{wi}(domain); it is
    # named after the shorter word
    ids, coords, index = [], [], {}
    word_points = {}
    for w in words:
        img = apply_word(circles, w, base)
        local = np.empty(len(base), dtype=np.intp)
        for j in range(len(base)):
            owner = w
            arc = next((i for i, sl in arc_slice.items() if sl[0] <= j <= sl[-1]), None)
            if arc is not None and w and w[-1] == arc:
                owner = w[:-1]
            key = (owner, j)
            if key not in index:
                index[key] = len(ids)
                ids.append(key)
                coords.append(apply_word(circles, owner, base[j]) if owner != w else img[j])
            local[j] = index[key]
        word_points[w] = local
    pts = np.array(coords, dtype=complex)
    xy = np.stack([pts.real, pts.imag], axis=1)
    cloud = FiniteCompactum.from_points(xy, ids=[(_word_id(w), j) for w, j in ids])
    splits = []
    for w in words[1:]:
        # the separator between g_{w'} and g_w, w = w' i, is g_{w'}(arc i)
        parent, i = w[:-1], w[-1]
        A_idx = word_points[w][arc_slice[i]]
        center, radius = _fit_circle(pts[A_idx])
        r = np.abs(pts - center)
        on = np.abs(r - radius) <= 1e-9 * max(radius, 1.0)
        if not np.array_equal(np.flatnonzero(on), np.sort(A_idx)):
            raise DecompositionError(f"separator of word {w} does not match its circle")
        # the side of the circle holding the deeper word is the inside iff
        # the fitted circle's disk holds the child's interior
        child_int = word_points[w][:n_int]
        inside = r < radius
        deeper = inside if inside[child_int].all() else ~inside
        Z = deeper | on
        Y = ~deeper | on
        splits.append(Splitting(on, Y, Z, name=_word_id(w)))
    C = Decomposition(cloud, splits)
    rep = check_noncrossing(C)
    if not rep.ok:
        raise DecompositionError("generated splittings cross")
    template = disk_template(circles, words, word_points, arc_slice, n_int, cloud, depth)
    counts = [sum(1 for w in words if len(w) == d) for d in range(depth + 1)]
    return DiskModel(circles, words, cloud, word_points, base, C, template, counts)


def _word_id(w):
    return "".join(str(i) for i in w) or "e"


def disk_template(circles, words, word_points, arc_slice, n_int, cloud, depth) -> TreeSystem:
    """Tree of translated domains glued along their shared arcs.

    Vertex ``v`` is the position of its word in shortlex order; the edge
    from a word to its child ``w i`` is numbered like that child.  Arcs of
    the outermost words become stubs, with tails bounding the Euclidean
    diameter of everything beyond them.
    """
    k = len(circles)
    vid = {w: v for v, w in enumerate(words)}
    alpha, omega, bar, stubs, tails = {}, {}, {}, [], {}
    cons, per, con = {}, {}, {}
    for w in words:
        cons[vid[w]] = cloud.subspace(word_points[w])
    next_stub = 2 * len(words)
    for w in words:
        v = vid[w]
        for i in range(k):
            if w and w[-1] == i:
                continue
            child = w + (i,)
            local_arc = arc_slice[i]
            if child in vid:
                c = vid[child]
                e, b = 2 * (c - 1), 2 * (c - 1) + 1
                alpha[e], omega[e], bar[e] = v, c, b
                alpha[b], omega[b], bar[b] = c, v, e
                per[e] = local_arc
                per[b] = local_arc
                con[e] = local_arc
                con[b] = local_arc
            else:
                z = next_stub
                next_stub += 1
                alpha[z], omega[z] = v, None
                stubs.append(z)
                per[z] = local_arc
                # the region beyond is inside the translated round disk
                img = apply_word(circles, w, circles[i].center + circles[i].radius * np.exp(1j * np.linspace(0, 2 * np.pi, 64)))
                tails[z] = float(np.abs(img[:, None] - img[None, :]).max())
    tree = Tree(range(len(words)), alpha, omega, bar, stubs)
    return TreeSystem(tree, cons, per, con, tails)


def domain_distortion(model: DiskModel, w) -> dict:
    """Compare the domain of ``w`` with a fresh translate of the base sample.

    Reports the coordinate gap and the distortion of the hyperbolic metric
    under the matching ``x <-> g_w(x)``.  Both vanish for an exact
    Moebius action.
    """
    img = apply_word(model.circles, w, model.base)
    got = model.cloud.coords[model.word_points[w]]
    got = got[:, 0] + 1j * got[:, 1]
    gap = float(np.abs(img - got).max())
    h0 = _hyperbolic(model.base)
    h1 = _hyperbolic(got)
    return {"coordinate_gap": gap, "hyperbolic_distortion": float(np.abs(h0 - h1).max())}


def _hyperbolic(z):
    num = 2 * np.abs(z[:, None] - z[None, :]) ** 2
    den = (1 - np.abs(z[:, None]) ** 2) * (1 - np.abs(z[None, :]) ** 2)
    return np.arccosh(1 + num / den)
