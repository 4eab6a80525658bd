"""Dirichlet domains of convex-cocompact surface groups, clipped to the
convex core, and the face-adjacency BFS that enumerates group balls.

Everything here assumes the basepoint has been moved to ``i``, so that
cosh d(i, g i) = (a^2 + b^2 + c^2 + d^2) / 2 and the Klein model is centred
at the basepoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import words as W
from .hyp_core import GeometryError, fixed_points

# Klein-disk vertex radius beyond which the clipped polygon counts as unbounded
UNBOUNDED_RADIUS = 1.0 - 1e-13
EDGE_TOL = 1e-10


class UncertifiedDomainError(GeometryError):
    """Face set of the Dirichlet domain did not stabilize."""


class ResourceCapError(RuntimeError):
    """Enumeration would exceed the configured element cap."""


def cosh_displacement(mats: np.ndarray) -> np.ndarray:
    """cosh d(i, g i) for a stack of matrices of shape (n, 2, 2)."""
    return 0.5 * np.einsum("nij,nij->n", mats, mats)


def displacement(mats: np.ndarray) -> np.ndarray:
    return np.arccosh(np.maximum(cosh_displacement(mats), 1.0))


def to_klein(z: complex) -> np.ndarray:
    """Klein-model coordinates of a half-plane point, disk centred at i."""
    w = (z - 1j) / (z + 1j)
    k = 2 * w / (1 + abs(w) ** 2)
    return np.array([k.real, k.imag])


def ideal_to_circle(x: float) -> np.ndarray:
    if math.isinf(x):
        return np.array([1.0, 0.0])
    w = (x - 1j) / (x + 1j)
    return np.array([w.real, w.imag])


def bisector_constraint(m: np.ndarray):
    """Half-plane {x : n . x <= c} in Klein coordinates of points closer to i
    than to m(i)."""
    a, b, c_, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    den = c_ * 1j + d
    gz = (a * 1j + b) / den
    k = to_klein(gz)
    r = float(np.hypot(k[0], k[1]))
    delta = math.atanh(min(r, 1 - 1e-17))
    return k / r, math.tanh(delta / 2)


def chord_constraint(p: float, q: float):
    """Half-plane bounded by the chord of the geodesic (p, q) containing the
    centre.  Returns (normal, offset) with offset >= 0."""
    e1, e2 = ideal_to_circle(p), ideal_to_circle(q)
    t = e2 - e1
    n = np.array([-t[1], t[0]])
    n /= np.hypot(n[0], n[1])
    c = float(n @ e1)
    if c < 0:
        n, c = -n, -c
    return n, c


def clip(verts: list, labels: list, n: np.ndarray, c: float, label):
    """Clip a convex polygon (vertex list with per-edge labels, edge k going
    from verts[k] to verts[k+1]) by the half-plane n . x <= c."""
    out_v, out_l = [], []
    m = len(verts)
    vals = [float(n @ v) - c for v in verts]
    for k in range(m):
        P, Q = verts[k], verts[(k + 1) % m]
        fp, fq = vals[k], vals[(k + 1) % m]
        lab = labels[k]
        if fp <= 0:
            out_v.append(P)
            if fq <= 0:
                out_l.append(lab)
            else:
                s = fp / (fp - fq)
                out_l.append(lab)
                out_v.append(P + s * (Q - P))
                out_l.append(label)
        elif fq <= 0:
            s = fp / (fp - fq)
            out_v.append(P + s * (Q - P))
            out_l.append(lab)
    return out_v, out_l


@dataclass
class CorePolygon:
    """Convex polygon K in the Klein disk containing D_o intersected with the
    convex core, with the constraint that produced each edge."""

    vertices: list
    labels: list  # ("g", index) for bisectors, ("side", index) for chords

    @property
    def radius(self) -> float:
        r = max(float(np.hypot(*v)) for v in self.vertices)
        if r >= UNBOUNDED_RADIUS:
            return math.inf
        return math.atanh(r)

    def edge_labels(self) -> list:
        out = []
        m = len(self.vertices)
        for k in range(m):
            P, Q = self.vertices[k], self.vertices[(k + 1) % m]
            if np.hypot(*(Q - P)) > EDGE_TOL:
                out.append(self.labels[k])
        return out


def _bisector_stack(mats: np.ndarray):
    # w = (g i - i)/(g i + i) has |w| = tanh(delta/2), direction = unit normal
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    z = (a * 1j + b) / (c * 1j + d)
    w = (z - 1j) / (z + 1j)
    r = np.abs(w)
    return w, r


def core_polygon(mats: np.ndarray, chords: list) -> CorePolygon:
    """Intersect the bisector half-planes of the non-identity matrices in
    ``mats`` with the chord half-planes ``chords`` (list of (p, q))."""
    verts = [np.array(v, float) for v in ((-1.5, -1.5), (1.5, -1.5), (1.5, 1.5), (-1.5, 1.5))]
    labels = [None] * 4
    mats = np.asarray(mats, float)
    w, r = _bisector_stack(mats) if len(mats) else (np.zeros(0, complex), np.zeros(0))
    keep = np.nonzero(r > 1e-12)[0]
    cons = [(float(r[k]), ("g", int(k))) for k in keep]
    normals = {("g", int(k)): np.array([w[k].real, w[k].imag]) / r[k] for k in keep}
    for j, ch in enumerate(chords):
        c = ch[2] if len(ch) > 2 else chord_constraint(ch[0], ch[1])[1]
        cons.append((float(c), ("side", j)))
    cons.sort(key=lambda t: t[0])
    for c, lab in cons:
        vr = max(float(np.hypot(v[0], v[1])) for v in verts)
        if vr <= c:
            break  # sorted offsets: every remaining constraint is redundant
        if lab[0] == "side":
            n, c = chord_constraint(*chords[lab[1]][:2])
        else:
            n = normals[lab]
        if max(float(n @ v) for v in verts) <= c:
            continue
        verts, labels = clip(verts, labels, n, c, lab)
        if not verts:
            raise GeometryError("empty core polygon: basepoint outside the convex core")
    return CorePolygon(verts, labels)


@dataclass
class Ball:
    """Group elements with displacement at most ``radius``, in canonical order."""

    radius: float
    mats: np.ndarray  # (n, 2, 2)
    words: list
    cosh: np.ndarray

    def __len__(self):
        return len(self.words)


def _normalize_stack(m: np.ndarray) -> np.ndarray:
    tr = m[:, 0, 0] + m[:, 1, 1]
    flip = tr < 0
    # tie: trace 0, first nonzero entry negative
    zero = tr == 0
    if zero.any():
        for k in np.nonzero(zero)[0]:
            for v in m[k].ravel():
                if v != 0:
                    flip[k] = v < 0
                    break
    m = m.copy()
    m[flip] *= -1
    return m


def ball_bfs(step_mats: np.ndarray, step_words: list, radius: float,
             max_elements: int = 3_000_000) -> Ball:
    """All products reachable from the identity by right-multiplication with
    step elements while staying within displacement ``radius``.

    When the steps contain every face pairing of the Dirichlet domain this is
    every element with displacement <= radius: the tiles crossed by the
    segment [o, g o] have centres within the same radius and consecutive
    tiles differ by a face pairing.
    """
    lim = math.cosh(radius) * (1 + 1e-12) + 1e-12
    seen = {(): 0}
    mats = [np.eye(2)]
    wlist = [()]
    frontier = np.array([np.eye(2)])
    fwords = [()]
    S = np.asarray(step_mats, float)
    while len(fwords):
        prod = np.einsum("nij,mjk->nmik", frontier, S)
        ch = 0.5 * np.einsum("nmij,nmij->nm", prod, prod)
        ok = np.argwhere(ch <= lim)
        new_m, new_w = [], []
        for a, b in ok:
            w = W.concat_reduced(fwords[a], step_words[b])
            if w in seen:
                continue
            seen[w] = len(wlist)
            wlist.append(w)
            new_m.append(prod[a, b])
            new_w.append(w)
            if len(wlist) > max_elements:
                raise ResourceCapError(f"group ball exceeds {max_elements} elements")
        mats.extend(new_m)
        frontier = np.array(new_m) if new_m else np.zeros((0, 2, 2))
        fwords = new_w
    allm = _normalize_stack(np.array(mats))
    ch = cosh_displacement(allm)
    order = sorted(range(len(wlist)), key=lambda k: (round(float(ch[k]), 9), W.shortlex_key(wlist[k])))
    allm = allm[order]
    return Ball(radius, allm, [wlist[k] for k in order], ch[order])


def axes_endpoints(mats: np.ndarray) -> np.ndarray:
    out = np.empty((len(mats), 2))
    for k, m in enumerate(mats):
        out[k] = fixed_points(m)
    return out


@dataclass
class DomainData:
    face_mats: np.ndarray
    face_words: list
    rho: float
    polygon: CorePolygon
    probe_radius: float
    certified: bool


def _lift_chords(ball: Ball, bmats: list, reach: float):
    chords = []
    m = ball.mats
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    for h in bmats:
        ends = []
        for x in fixed_points(h):
            if math.isinf(x):
                num, den = a, c
            else:
                num, den = a * x + b, c * x + d
            with np.errstate(divide="ignore", invalid="ignore"):
                ends.append(np.where(den != 0, num / np.where(den != 0, den, 1), np.inf))
        gp, gq = ends
        with np.errstate(divide="ignore", invalid="ignore"):
            e1 = np.where(np.isinf(gp), 1 + 0j, (gp - 1j) / (gp + 1j))
            e2 = np.where(np.isinf(gq), 1 + 0j, (gq - 1j) / (gq + 1j))
        # distance from the centre to the chord is |Im(conj(e1) e2)| / |e2 - e1|
        with np.errstate(divide="ignore", invalid="ignore"):
            off = np.abs((np.conj(e1) * e2).imag) / np.abs(e2 - e1)
        for k in np.nonzero(off < reach)[0]:
            chords.append((float(gp[k]), float(gq[k]), float(off[k])))
    return chords


def _polygon_from_ball(ball: Ball, bmats: list, rho_hint: float):
    reach = math.tanh(rho_hint) if math.isfinite(rho_hint) else 1.0
    chords = _lift_chords(ball, bmats, reach + 1e-9)
    return core_polygon(ball.mats, chords)


def _faces(poly: CorePolygon, ball: Ball):
    idx = sorted({lab[1] for lab in poly.edge_labels() if lab and lab[0] == "g"})
    words = {ball.words[k] for k in idx}
    words |= {W.inverse(w) for w in words}
    return words


def dirichlet_domain(gen_mats: list, gen_words: list, boundary_mats: list,
                     max_rounds: int = 12, max_elements: int = 3_000_000) -> DomainData:
    """Face pairings of the Dirichlet domain at i clipped to the convex core.

    Iterates BFS-with-current-steps / clip / collect-faces until the face set
    is a fixed point, then confirms the face set is unchanged when the probe
    radius grows by 25%.
    """
    step_w = {}
    for m, w in zip(gen_mats, gen_words):
        step_w[w] = np.asarray(m, float)
        minv = np.array([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]], float)
        step_w[W.inverse(w)] = minv
    disp = displacement(np.array(list(step_w.values())))
    R = max(1.0, float(disp.max()) + 0.5)
    prev_faces = None
    bm = [np.asarray(h, float) for h in boundary_mats]
    bd = [float(np.arccosh(max(1.0, _axis_cosh_dist(h)))) for h in bm]
    Dmax = max(bd) if bd else 0.0
    for _ in range(max_rounds):
        keys = sorted(step_w, key=W.shortlex_key)
        ball = ball_bfs(np.array([step_w[k] for k in keys]), keys, R, max_elements)
        poly = _polygon_from_ball(ball, bm, R)
        rho = poly.radius
        if not math.isfinite(rho):
            R *= 1.5
            continue
        faces = _faces(poly, ball)
        need = 1.25 * max(2 * rho, rho + Dmax)
        for w in faces:
            if w not in step_w:
                try:
                    step_w[w] = ball.mats[ball.words.index(w)]
                except ValueError:
                    # inverse of a face whose BFS path left the probe ball
                    step_w[w] = _inv2(step_w[W.inverse(w)] if W.inverse(w) in step_w
                                      else ball.mats[ball.words.index(W.inverse(w))])
        if faces == prev_faces and R >= need:
            # stability certificate: rerun at 25% larger probe radius
            R2 = 1.25 * R
            keys = sorted(faces, key=W.shortlex_key)
            ball2 = ball_bfs(np.array([step_w[k] for k in keys]), keys, R2, max_elements)
            poly2 = _polygon_from_ball(ball2, bm, R2)
            faces2 = _faces(poly2, ball2)
            certified = faces2 == faces
            fm = np.array([step_w[k] for k in keys])
            return DomainData(fm, keys, rho, poly, R, certified)
        prev_faces = faces
        R = max(R, need)
    raise UncertifiedDomainError("Dirichlet face set did not stabilize")


def _inv2(m):
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _axis_cosh_dist(h: np.ndarray) -> float:
    """cosh of the distance from i to the axis of h."""
    L = axis_line(h)
    return dist_i_to_line_cosh(L[0, 1], L[1, 0])


def axis_line(h: np.ndarray) -> np.ndarray:
    tr = h[0, 0] + h[1, 1]
    if tr < 0:
        h, tr = -h, -tr
    hinv = np.array([[h[1, 1], -h[0, 1]], [-h[1, 0], h[0, 0]]])
    return (h - hinv) / math.sqrt(tr * tr - 4)


def dist_i_to_line_cosh(q: float, r: float) -> float:
    # for a line matrix [[p, q], [r, -p]], sinh d(i, line) = |q - r| / 2:
    # q - r = tr(M J) with J the rotation by pi about i, invariant under the
    # stabilizer of i, and correct on the half-circles (-R, R)
    return math.sqrt(1.0 + ((q - r) / 2) ** 2)
