"""Certified enumeration of ortho geodesics and closed geodesics.

Ortho geodesics are indexed by oriented pairs: an entry (i, j) is an orbit
of a boundary lift of component j seen from the lift axis(h_i), i.e. a
double coset <h_i> g <h_j>.  Every geometric ortho geodesic therefore appears
twice, once from each foot.  With this convention the foot-shadow of an
entry on its starting component is 2 ln coth(l/2), and these shadows tile
each boundary component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import words as W
from .dirichlet import Ball, ResourceCapError, axis_line, ball_bfs, dist_i_to_line_cosh
from .hyp_core import Isometry
from .surfaces import FuchsianSurface, _inv, _normalizer, evaluate_word

FOOT_TOL = 1e-7
WINDOW_SLACK = 1e-6
LENGTH_TOL = 1e-7
MERGE_TOL = 1e-8
DEFAULT_MAX_ELEMENTS = 3_000_000


class CertificationError(RuntimeError):
    """Enumeration could not be certified complete."""


@dataclass(frozen=True)
class OrthoGeodesicEntry:
    length: float
    boundary_pair: tuple
    feet: tuple
    word: tuple
    representative: Isometry | None = None

    @property
    def i(self):
        return self.boundary_pair[0]

    @property
    def j(self):
        return self.boundary_pair[1]


@dataclass
class OrthoSpectrum:
    """Sorted ortho spectrum up to a cutoff.

    Parameters
    ----------
    entries : list of OrthoGeodesicEntry
        One entry per oriented ortho geodesic, sorted by length.
    cutoff : float
    certified : bool
        True when the group ball radius met the completeness bound.
    ball_radius : float
    fingerprint : str
        Fingerprint of the originating surface spec.
    boundary_lengths : tuple of float
    """

    entries: list
    cutoff: float
    certified: bool
    ball_radius: float
    fingerprint: str = ""
    boundary_lengths: tuple = ()
    euler_characteristic: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.entries])

    def __len__(self):
        return len(self.entries)

    def truncate(self, L: float) -> "OrthoSpectrum":
        return OrthoSpectrum([e for e in self.entries if e.length <= L], min(L, self.cutoff),
                             self.certified, self.ball_radius, self.fingerprint,
                             self.boundary_lengths, self.euler_characteristic, dict(self.meta))

    def pair_lengths(self, i: int) -> np.ndarray:
        return np.array([e.length for e in self.entries if e.i == i])


def group_ball(surface: FuchsianSurface, R: float, max_elements: int = DEFAULT_MAX_ELEMENTS) -> Ball:
    """All g with d(o, g o) <= R via BFS over Dirichlet face pairings."""
    if not surface.certified:
        raise CertificationError("face pairings are not certified")
    cov = surface.meta.get("cover")
    if cov is not None:
        # the kernel part of a complete base ball is a complete cover ball
        base = group_ball(cov.base, R, max_elements)
        sel = np.nonzero(cov.residues(base.words) == 0)[0]
        return Ball(R, base.mats[sel], [cov.to_cover_word(base.words[k]) for k in sel], base.cosh[sel])
    mats = np.array([f.matrix for f in surface.face_pairings])
    return ball_bfs(mats, list(surface.face_words), R, max_elements)


def boundary_frames(surface: FuchsianSurface):
    """Per boundary component: (h_i, N_i, line matrix, D_i, D_i', l_i).

    N_i sends axis(h_i) to the imaginary axis with h_i translating upward and
    the foot of the perpendicular from the basepoint to i, which is the foot
    origin of that component.  For a cover the frames live in the base group:
    component t b^q t^-1 is conjugated back by t to b^q."""
    cov = surface.meta.get("cover")
    if cov is not None:
        base = boundary_frames(cov.base)
        out = []
        for b, q, _ in cov.lifts:
            h, N, L, D, _, l = base[b]
            hq = np.linalg.matrix_power(h, q)
            lq = q * l
            out.append((hq, N, L, D, math.acosh(math.cosh(D) * math.cosh(lq / 2 + WINDOW_SLACK)), lq))
        return out
    out = []
    gm = surface.gen_mats
    for k, w in enumerate(surface.boundary_words):
        h = evaluate_word(gm, w)
        if h[0, 0] + h[1, 1] < 0:
            h = -h
        L = axis_line(h)
        D = math.acosh(dist_i_to_line_cosh(L[0, 1], L[1, 0]))
        ref = _foot_from_i(h)
        N = _normalizer(h, ref)
        l = 2 * math.acosh((h[0, 0] + h[1, 1]) / 2)
        Dp = math.acosh(math.cosh(D) * math.cosh(l / 2 + WINDOW_SLACK))
        out.append((h, N, L, D, Dp, l))
    return out


def _foot_from_i(h):
    from .surfaces import _any_axis_point
    N0 = _normalizer(h, _any_axis_point(h))
    w = (N0[0, 0] * 1j + N0[0, 1]) / (N0[1, 0] * 1j + N0[1, 1])
    foot = 1j * abs(w)
    Ni = _inv(N0)
    return (Ni[0, 0] * foot + Ni[0, 1]) / (Ni[1, 0] * foot + Ni[1, 1])


def required_radius(surface: FuchsianSurface, L: float) -> float:
    fr = boundary_frames(surface)
    Dp = max(f[4] for f in fr)
    return L + 2 * Dp


def _lines_in_frame(N, mats, line):
    A = np.einsum("ij,njk->nik", N, mats)
    Ainv = np.empty_like(A)
    Ainv[:, 0, 0] = A[:, 1, 1]
    Ainv[:, 1, 1] = A[:, 0, 0]
    Ainv[:, 0, 1] = -A[:, 0, 1]
    Ainv[:, 1, 0] = -A[:, 1, 0]
    return np.einsum("nij,jk,nkl->nil", A, line, Ainv)


def _inv_stack(m):
    out = np.empty_like(m)
    out[:, 0, 0] = m[:, 1, 1]
    out[:, 1, 1] = m[:, 0, 0]
    out[:, 0, 1] = -m[:, 0, 1]
    out[:, 1, 0] = -m[:, 1, 0]
    return out


def _perp_data(M):
    """(length, foot position, side) of the perpendiculars from the imaginary
    axis to lines with line matrices M = [[p, q], [r, -p]]."""
    p, q, r = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0]
    s2 = -q * r
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.arcsinh(np.sqrt(np.maximum(s2, 0.0)))
        foot = 0.5 * np.log(-q / r)
        side = np.sign(p / r)
    return d, foot, side, s2


def ortho_spectrum(surface: FuchsianSurface, L: float, *, ball: Ball | None = None,
                   max_elements: int = DEFAULT_MAX_ELEMENTS, keep_reps: bool = True,
                   pairs=None) -> OrthoSpectrum:
    """Oriented ortho spectrum up to length L with a completeness certificate.

    Every double coset <h_i> g <h_j> with perpendicular length <= L has a
    representative with d(o, g o) <= L + D_i' + D_j', where
    D' = arccosh(cosh D cosh(l/2)) bounds the distance from o to a foot moved
    within half a period of the foot of the perpendicular from o.
    """
    if L < 0:
        raise ValueError("cutoff must be non-negative")
    frames = boundary_frames(surface)
    nb = len(frames)
    restricted = pairs is not None
    pairs = [(i, j) for i in range(nb) for j in range(nb)] if pairs is None else [tuple(p) for p in pairs]
    R = L + max(frames[i][4] + frames[j][4] for i, j in pairs) if pairs else 0.0
    certified = surface.certified
    cov = surface.meta.get("cover")
    if cov is not None:
        # enumerate over the base group: orthos from cover component i to j
        # are double cosets <b_i^q> g <b_j^q> with g in the coset of t_i^-1 t_j
        if ball is None or ball.radius < R:
            ball = group_ball(cov.base, R, max_elements)
        res = cov.residues(ball.words)
        offs = [cov.residue(t) for _, _, t in cov.lifts]
    elif ball is None or ball.radius < R:
        ball = group_ball(surface, R, max_elements)
    mats = ball.mats
    wds = ball.words
    disp = np.arccosh(np.maximum(ball.cosh, 1.0))
    out = []
    for i, j in pairs:
        hi, Ni, Li, Di, Dpi, li = frames[i]
        hj, Nj, Lj, Dj, Dpj, lj = frames[j]
        ok = disp <= L + Dpi + Dpj + 1e-9
        if cov is not None:
            ok &= res == (offs[j] - offs[i]) % cov.degree
        sel = np.nonzero(ok)[0]
        if len(sel) == 0:
            continue
        d, foot, same = _perp_checked(Ni, mats[sel], Lj, i, j)
        # one representative per double coset: both feet within half a
        # period (plus slack) of their reference points
        keep = (~same) & (d <= L + 1e-12) & (np.abs(foot) <= li / 2 + WINDOW_SLACK)
        if not np.any(keep):
            continue
        idx = sel[keep]
        d, foot = d[keep], foot[keep]
        _, foot2, _ = _perp_checked(Nj, _inv_stack(mats[idx]), Li, j, i)
        keep2 = np.abs(foot2) <= lj / 2 + WINDOW_SLACK
        idx, d, foot, foot2 = idx[keep2], d[keep2], foot[keep2], foot2[keep2]
        for (dd, f1, f2, k) in _dedup(idx, d, np.mod(foot, li), np.mod(foot2, lj), li, wds, disp):
            word, rep = wds[k], mats[k]
            if cov is not None:
                ti, tj = cov.lifts[i][2], cov.lifts[j][2]
                full = W.multiply(ti, word, W.inverse(tj))
                rep = evaluate_word(cov.base.gen_mats, full)
                word = cov.to_cover_word(full)
            out.append(OrthoGeodesicEntry(float(dd), (i, j), (float(f1), float(f2)), word,
                                          Isometry.from_matrix(rep) if keep_reps else None))
    out.sort(key=lambda e: (e.length, e.boundary_pair, e.feet))
    return OrthoSpectrum(out, float(L), bool(certified), float(R), surface.fingerprint(),
                         tuple(surface.boundary_lengths), surface.euler_characteristic,
                         {"ball_size": len(ball), **({"pairs": pairs} if restricted else {})})


def _perp_checked(N, mats, line, i, j):
    M = _lines_in_frame(N, mats, line)
    d, foot, side, s2 = _perp_data(M)
    # rounding in M grows like |N g|^2 times machine epsilon
    A = np.einsum("ij,njk->nik", N, mats)
    scale = np.einsum("nij,nij->n", A, A)
    same = (np.abs(M[:, 0, 1]) + np.abs(M[:, 1, 0])) <= 1e-12 * scale
    if np.any((s2 < -1e-12 * scale ** 2) & ~same):
        raise CertificationError(f"boundary lifts of components {i} and {j} cross")
    sides = side[~same]
    if len(sides) and np.any(sides != sides[0]):
        raise CertificationError("boundary lifts on both sides of a boundary axis")
    return d, foot, same


def _dedup(idx, d, foot, foot2, period, wds, disp):
    """Merge window candidates with the same foot position (mod the period).

    Distinct lifts of a side of a convex set never share a foot, so equal
    feet mean the same double coset; duplicates only arise at the edges of
    the half-period windows."""
    # distinct feet of equal-length orthos are at least a shadow width
    # 2 ln coth(d/2) apart, which can be far below FOOT_TOL for long orthos
    def same(a, b, shift=0.0):
        tol = min(FOOT_TOL, 0.25 * math.log(1 / math.tanh(max(d[a], d[b]) / 2)))
        return abs(foot[a] + shift - foot[b]) <= tol and abs(d[a] - d[b]) <= LENGTH_TOL

    order = np.lexsort((d, foot))
    groups = []
    for o in order:
        for g in reversed(groups[-4:]):
            if same(g[0], o):
                g.append(o)
                break
        else:
            groups.append([o])
    if len(groups) > 1 and same(groups[0][0], groups[-1][0], period):
        groups[0].extend(groups.pop())
    out = []
    for g in groups:
        best = min(g, key=lambda o: (disp[idx[o]], W.shortlex_key(wds[idx[o]])))
        out.append((d[best], foot[best], foot2[best], int(idx[best])))
    return out


# ---------------------------------------------------------------- closed geodesics


@dataclass(frozen=True)
class ClosedGeodesic:
    length: float
    primitive: bool
    word: tuple
    multiplicity: int = 1


def closed_geodesics(surface: FuchsianSurface, L: float, *, max_elements: int = DEFAULT_MAX_ELEMENTS):
    """Unoriented closed geodesics (conjugacy classes up to inversion) of
    length <= L, sorted by length.

    Completeness: an axis of length <= L meets the convex core, which is
    covered by rho-balls around the orbit of o, so some conjugate moves o by
    at most L + 2 rho.
    """
    cov = surface.meta.get("cover")
    if cov is not None:
        return _cover_closed_geodesics(cov, L, max_elements)
    R = L + 2 * surface.rho
    ball = group_ball(surface, R, max_elements)
    tr = np.abs(ball.mats[:, 0, 0] + ball.mats[:, 1, 1])
    lim = 2 * math.cosh(L / 2) * (1 + 1e-12)
    found = {}
    for k in np.nonzero((tr > 2 + 1e-14) & (tr <= lim))[0]:
        w = ball.words[k]
        key = W.unoriented_conjugacy_key(w)
        if key in found:
            continue
        length = 2 * math.acosh(tr[k] / 2)
        found[key] = ClosedGeodesic(length, W.primitive_root(key)[1] == 1, key)
    out = sorted(found.values(), key=lambda c: (c.length, W.shortlex_key(c.word)))
    return out


def _cover_closed_geodesics(cov, L, max_elements):
    """Closed geodesics of a cyclic cover from the base classes.

    A base class r^k (r primitive, residue s) lies in the kernel iff the
    order q of s divides k; it then splits into gcd(n, s) kernel classes,
    which are primitive in the cover iff k == q."""
    n = cov.degree
    out = []
    for c in closed_geodesics(cov.base, L, max_elements=max_elements):
        root, k = W.primitive_root(c.word)
        s = cov.residue(root)
        q = n // math.gcd(n, s) if s else 1
        if k % q:
            continue
        word = W.unoriented_conjugacy_key(cov.to_cover_word(c.word))
        out.append(ClosedGeodesic(c.length, k == q, word, math.gcd(n, s) if s else n))
    return out


def systole(surface: FuchsianSurface, L_max: float, *, max_elements: int = DEFAULT_MAX_ELEMENTS) -> float:
    """Length of the shortest closed geodesic (boundary curves included)."""
    ub = min(2 * math.acosh(max(abs(g.trace), 2.0) / 2) for g in surface.generators)
    ub = min([ub] + list(surface.boundary_lengths))
    L = min(L_max, ub * (1 + 1e-9))
    cg = closed_geodesics(surface, L, max_elements=max_elements)
    if not cg:
        raise LookupError(f"no closed geodesic up to length {L_max}")
    return cg[0].length


def boundary_lifts(surface: FuchsianSurface, R: float, max_elements: int = DEFAULT_MAX_ELEMENTS):
    """Boundary lifts g axis(h_i) for g in the ball of radius R, deduplicated
    by endpoints; raises if two lifts cross."""
    from .hyp_core import Geodesic, fixed_points
    ball = group_ball(surface, R, max_elements)
    gm = surface.gen_mats
    out = []
    seen = []
    for i, w in enumerate(surface.boundary_words):
        h = evaluate_word(gm, w)
        p, q = fixed_points(h)
        for g, word in zip(ball.mats, ball.words):
            gp, gq = _act(g, p), _act(g, q)
            key = tuple(sorted((gp, gq)))
            out.append((Geodesic(gp, gq), i, word, key))
    out.sort(key=lambda t: (t[3], t[1], W.shortlex_key(t[2])))
    res = []
    for t in out:
        if res and _close(res[-1][3], t[3]):
            continue
        res.append(t)
    keys = [t[3] for t in res]
    _check_nesting(keys)
    return [(t[0], t[1], t[2]) for t in res]


def _act(g, x):
    if math.isinf(x):
        return g[0, 0] / g[1, 0] if g[1, 0] != 0 else math.inf
    den = g[1, 0] * x + g[1, 1]
    return (g[0, 0] * x + g[0, 1]) / den if den != 0 else math.inf


def _close(a, b, tol=1e-10):
    return all((math.isinf(x) and math.isinf(y)) or abs(x - y) <= tol * max(1, abs(x), abs(y))
               for x, y in zip(a, b))


def _check_nesting(keys):
    """Intervals of boundary lifts must be nested or disjoint."""
    stack = []
    for a, b in sorted(keys):
        while stack and stack[-1] <= a + 1e-12 * max(1, abs(a)):
            stack.pop()
        if stack and b > stack[-1] + 1e-9 * max(1, abs(b)):
            raise CertificationError("boundary lifts cross")
        stack.append(b)


# ---------------------------------------------------------------- serialization

SCHEMA_SPECTRUM = "orthospec.spectrum/1"
CSV_HEADER = "length,boundary_i,boundary_j,foot_i,foot_j"


def spectrum_to_json_obj(s: OrthoSpectrum) -> dict:
    """JSON mirror of the CSV plus cutoff, certificate and fingerprint.
    Floats keep their shortest round-trip form through the json module."""
    return {
        "schema": SCHEMA_SPECTRUM,
        "cutoff": s.cutoff,
        "certified": s.certified,
        "ball_radius": s.ball_radius,
        "fingerprint": s.fingerprint,
        "boundary_lengths": list(s.boundary_lengths),
        "euler_characteristic": s.euler_characteristic,
        "pairs": [list(p) for p in s.meta["pairs"]] if "pairs" in s.meta else None,
        "entries": [[e.length, e.i, e.j, e.feet[0], e.feet[1], list(e.word)] for e in s.entries],
    }


def spectrum_from_json_obj(d: dict) -> OrthoSpectrum:
    if d.get("schema") != SCHEMA_SPECTRUM:
        raise ValueError(f"schema: expected {SCHEMA_SPECTRUM}")
    entries = []
    for row in d["entries"]:
        length, i, j, f1, f2, word = row
        entries.append(OrthoGeodesicEntry(float(length), (int(i), int(j)), (float(f1), float(f2)),
                                          tuple(int(x) for x in word)))
    entries.sort(key=lambda e: (e.length, e.boundary_pair, e.feet))
    meta = {"pairs": [tuple(p) for p in d["pairs"]]} if d.get("pairs") else {}
    return OrthoSpectrum(entries, float(d["cutoff"]), bool(d["certified"]), float(d["ball_radius"]),
                         d.get("fingerprint", ""), tuple(float(x) for x in d["boundary_lengths"]),
                         d.get("euler_characteristic"), meta)


def spectrum_to_csv(s: OrthoSpectrum) -> str:
    lines = [CSV_HEADER]
    for e in s.entries:
        lines.append(f"{e.length!r},{e.i},{e.j},{e.feet[0]!r},{e.feet[1]!r}")
    return "\n".join(lines) + "\n"


def audit_spectrum(surface: FuchsianSurface, spectrum: OrthoSpectrum, tol: float = 1e-8) -> dict:
    """Recompute every entry's length from its word: the distance between
    axis(h_i) and g axis(h_j).  Detects edited or foreign spectrum files."""
    from .hyp_core import Geodesic, fixed_points, geodesic_distance
    gm = surface.gen_mats
    axes = [Geodesic(*fixed_points(evaluate_word(gm, w))) for w in surface.boundary_words]
    worst, first = 0.0, None
    for k, e in enumerate(spectrum.entries):
        if not (0 <= e.i < len(axes) and 0 <= e.j < len(axes)):
            err = math.inf
        else:
            g = evaluate_word(gm, e.word)
            p, q = axes[e.j].p, axes[e.j].q
            try:
                d = geodesic_distance(axes[e.i], Geodesic(_act(g, p), _act(g, q)))
                err = abs(d - e.length) / max(1.0, e.length)
            except Exception:
                err = math.inf
        if err > worst:
            worst = err
        if err > tol and first is None:
            first = {"index": k, "length": e.length, "boundary_pair": list(e.boundary_pair)}
    return {"max_relative_error": worst, "tolerance": tol, "first_mismatch": first,
            "ok": first is None}
