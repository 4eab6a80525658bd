"""Fuchsian groups with totally geodesic boundary built from Fenchel-Nielsen
data: pairs of pants, one-holed tori and trivalent pants graphs.

Every constructor ends in :func:`finalize`, which picks a basepoint inside the
convex core, conjugates it to ``i``, replaces each boundary word by the
conjugate whose axis is nearest the basepoint and certifies the Dirichlet
domain.  Twist 0 means the reference seam feet of the two glued cuffs are
aligned; for cuff ``y`` of a pants the reference seam is the common
perpendicular to cuff ``(y + 1) % 3``.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import words as W
from .dirichlet import (
    DomainData,
    axis_line,
    ball_bfs,
    dirichlet_domain,
    dist_i_to_line_cosh,
)
from .hyp_core import (
    GeometryError,
    Isometry,
    IsometryClass,
    classify,
    fixed_points,
    translation_length,
)

SCHEMA_SURFACE = "orthospec.surface/1"
KINDS = ("pants", "one_holed_torus", "pants_graph")


class SpecError(ValueError):
    """Malformed or inconsistent surface description."""


class ConstructionError(GeometryError):
    """Numerical failure while assembling a surface group."""


# ---------------------------------------------------------------- specs


@dataclass(frozen=True)
class Gluing:
    pants_a: int
    cuff_a: int
    pants_b: int
    cuff_b: int
    length: float
    twist: float = 0.0


@dataclass(frozen=True)
class Leg:
    pants: int
    cuff: int
    length: float


@dataclass(frozen=True)
class PantsGraph:
    pants: int
    gluings: tuple
    legs: tuple


@dataclass(frozen=True)
class SurfaceSpec:
    """Fenchel-Nielsen description of a surface.

    Parameters
    ----------
    kind : {"pants", "one_holed_torus", "pants_graph"}
    boundary_lengths : tuple of float
        Lengths of the boundary geodesics, in leg order for pants graphs.
    interior_curves : tuple of (length, twist)
        Gluing curves; for a one-holed torus the single curve alpha.
    graph : PantsGraph, optional
        Gluing pattern for ``kind == "pants_graph"``.
    """

    kind: str
    boundary_lengths: tuple
    interior_curves: tuple = ()
    graph: PantsGraph | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"kind: unknown surface kind {self.kind!r}")
        for k, v in enumerate(self.boundary_lengths):
            _check_len(v, f"boundary_lengths[{k}]")
        for k, (l, t) in enumerate(self.interior_curves):
            _check_len(l, f"interior_curves[{k}].length")
            if not math.isfinite(t):
                raise SpecError(f"interior_curves[{k}].twist: must be finite")
        if self.kind == "pants":
            if len(self.boundary_lengths) != 3 or self.interior_curves:
                raise SpecError("boundary_lengths: pants need exactly 3 boundary lengths and no interior curves")
        elif self.kind == "one_holed_torus":
            if len(self.boundary_lengths) != 1 or len(self.interior_curves) != 1:
                raise SpecError("interior_curves: a one-holed torus needs 1 boundary length and 1 interior curve")
        else:
            if self.graph is None:
                raise SpecError("graph: required for pants_graph")
            _check_graph(self.graph)
            legs = tuple(l.length for l in self.graph.legs)
            curves = tuple((g.length, g.twist) for g in self.graph.gluings)
            if self.boundary_lengths and tuple(self.boundary_lengths) != legs:
                raise SpecError("boundary_lengths: disagree with graph legs")
            if self.interior_curves and tuple(self.interior_curves) != curves:
                raise SpecError("interior_curves: disagree with graph gluings")
            object.__setattr__(self, "boundary_lengths", legs)
            object.__setattr__(self, "interior_curves", curves)

    @property
    def euler_characteristic(self) -> int:
        if self.kind == "pants":
            return -1
        if self.kind == "one_holed_torus":
            return -1
        return -self.graph.pants

    def to_json_obj(self) -> dict:
        d = {
            "kind": self.kind,
            "boundary_lengths": list(self.boundary_lengths),
            "interior_curves": [{"length": l, "twist": t} for l, t in self.interior_curves],
        }
        if self.graph is not None:
            d["graph"] = {
                "pants": self.graph.pants,
                "gluings": [g.__dict__.copy() for g in self.graph.gluings],
                "legs": [l.__dict__.copy() for l in self.graph.legs],
            }
        return d

    @classmethod
    def from_json_obj(cls, d: dict) -> "SurfaceSpec":
        if not isinstance(d, dict):
            raise SpecError("spec: expected a JSON object")
        _reject_unknown(d, {"kind", "boundary_lengths", "interior_curves", "graph", "schema"}, "spec")
        kind = d.get("kind")
        bl = d.get("boundary_lengths", [])
        ic = d.get("interior_curves", [])
        if not isinstance(bl, list) or not isinstance(ic, list):
            raise SpecError("boundary_lengths/interior_curves: expected lists")
        curves = []
        for k, c in enumerate(ic):
            if not isinstance(c, dict):
                raise SpecError(f"interior_curves[{k}]: expected an object")
            _reject_unknown(c, {"length", "twist"}, f"interior_curves[{k}]")
            curves.append((_num(c.get("length"), f"interior_curves[{k}].length"),
                           _num(c.get("twist", 0.0), f"interior_curves[{k}].twist")))
        graph = None
        if d.get("graph") is not None:
            g = d["graph"]
            _reject_unknown(g, {"pants", "gluings", "legs"}, "graph")
            glus = []
            for k, e in enumerate(g.get("gluings", [])):
                _reject_unknown(e, {"pants_a", "cuff_a", "pants_b", "cuff_b", "length", "twist"}, f"graph.gluings[{k}]")
                glus.append(Gluing(int(e["pants_a"]), int(e["cuff_a"]), int(e["pants_b"]), int(e["cuff_b"]),
                                   _num(e.get("length"), f"graph.gluings[{k}].length"),
                                   _num(e.get("twist", 0.0), f"graph.gluings[{k}].twist")))
            legs = []
            for k, e in enumerate(g.get("legs", [])):
                _reject_unknown(e, {"pants", "cuff", "length"}, f"graph.legs[{k}]")
                legs.append(Leg(int(e["pants"]), int(e["cuff"]), _num(e.get("length"), f"graph.legs[{k}].length")))
            graph = PantsGraph(int(g.get("pants", 0)), tuple(glus), tuple(legs))
        return cls(kind, tuple(_num(v, f"boundary_lengths[{k}]") for k, v in enumerate(bl)),
                   tuple(curves), graph)

    def fingerprint(self) -> str:
        return _fingerprint(self.to_json_obj())


def _fingerprint(obj) -> str:
    s = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(s.encode()).hexdigest()[:16]


def _num(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{name}: expected a number, got {v!r}")
    return float(v)


def _check_len(v, name):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise SpecError(f"{name}: length must be a positive number, got {v!r}")


def _reject_unknown(d, allowed, where):
    extra = set(d) - set(allowed)
    if extra:
        raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")


def _check_graph(g: PantsGraph):
    if g.pants < 1:
        raise SpecError("graph.pants: need at least one pair of pants")
    seen = {}
    for k, e in enumerate(g.gluings):
        for p, c in ((e.pants_a, e.cuff_a), (e.pants_b, e.cuff_b)):
            if not (0 <= p < g.pants and 0 <= c <= 2):
                raise SpecError(f"graph.gluings[{k}]: cuff ({p}, {c}) out of range")
            if (p, c) in seen:
                raise SpecError(f"graph.gluings[{k}]: cuff ({p}, {c}) used twice")
            seen[(p, c)] = ("gluing", k)
        if (e.pants_a, e.cuff_a) == (e.pants_b, e.cuff_b):
            raise SpecError(f"graph.gluings[{k}]: a cuff cannot be glued to itself")
        _check_len(e.length, f"graph.gluings[{k}].length")
    for k, l in enumerate(g.legs):
        if not (0 <= l.pants < g.pants and 0 <= l.cuff <= 2):
            raise SpecError(f"graph.legs[{k}]: cuff out of range")
        if (l.pants, l.cuff) in seen:
            raise SpecError(f"graph.legs[{k}]: cuff ({l.pants}, {l.cuff}) used twice")
        seen[(l.pants, l.cuff)] = ("leg", k)
        _check_len(l.length, f"graph.legs[{k}].length")
    if len(seen) != 3 * g.pants:
        raise SpecError("graph: every cuff must be a leg or glued exactly once")
    if 2 * len(g.gluings) != 3 * g.pants - len(g.legs):
        raise SpecError("graph: gluing count inconsistent with legs")
    if not g.legs:
        raise SpecError("graph.legs: closed surfaces are not supported (need boundary)")
    # connectivity
    adj = {p: set() for p in range(g.pants)}
    for e in g.gluings:
        adj[e.pants_a].add(e.pants_b)
        adj[e.pants_b].add(e.pants_a)
    todo, reach = [0], {0}
    while todo:
        p = todo.pop()
        for q in adj[p]:
            if q not in reach:
                reach.add(q)
                todo.append(q)
    if len(reach) != g.pants:
        raise SpecError("graph: gluing graph is disconnected")


# ---------------------------------------------------------------- surfaces


@dataclass(frozen=True, eq=False)
class FuchsianSurface:
    """Convex-cocompact surface group with geodesic boundary, normalized so
    the basepoint is ``i``.

    Parameters
    ----------
    generators : tuple of Isometry
        Free basis of the group.
    boundary_words : tuple of words
        One word per boundary component in the generators; each axis is the
        lift nearest the basepoint among the conjugates examined.
    basepoint : complex
        Always ``1j`` after normalization.
    face_pairings : tuple of Isometry
        Dirichlet-domain neighbours of the basepoint restricted to the convex
        core, closed under inversion.
    spec : SurfaceSpec or dict
        Originating description (a dict for covers).
    """

    generators: tuple
    boundary_words: tuple
    basepoint: complex
    face_pairings: tuple
    face_words: tuple
    spec: object
    rho: float = 0.0
    certified: bool = True
    probe_radius: float = 0.0
    boundary_lengths: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def euler_characteristic(self) -> int:
        return 1 - self.rank

    @property
    def area(self) -> float:
        return 2 * math.pi * abs(self.euler_characteristic)

    @property
    def perimeter(self) -> float:
        return float(sum(self.boundary_lengths))

    @property
    def gen_mats(self) -> np.ndarray:
        return np.array([g.matrix for g in self.generators])

    def evaluate(self, word) -> np.ndarray:
        return evaluate_word(self.gen_mats, word)

    def boundary_matrix(self, i: int) -> np.ndarray:
        return self.evaluate(self.boundary_words[i])

    def boundary_distance(self, i: int) -> float:
        """Distance from the basepoint to the axis of boundary word i."""
        L = axis_line(self.boundary_matrix(i))
        return math.acosh(dist_i_to_line_cosh(L[0, 1], L[1, 0]))

    def spec_obj(self) -> dict:
        return self.spec.to_json_obj() if isinstance(self.spec, SurfaceSpec) else self.spec

    def fingerprint(self) -> str:
        return _fingerprint(self.spec_obj())

    def to_json_obj(self) -> dict:
        return {
            "schema": SCHEMA_SURFACE,
            "spec": self.spec_obj(),
            "fingerprint": self.fingerprint(),
            "generators": [[g.a, g.b, g.c, g.d] for g in self.generators],
            "boundary_words": [list(w) for w in self.boundary_words],
            "boundary_lengths": list(self.boundary_lengths),
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "face_pairing_words": [list(w) for w in self.face_words],
            "face_pairings": [[g.a, g.b, g.c, g.d] for g in self.face_pairings],
            "core_radius": self.rho,
            "probe_radius": self.probe_radius,
            "certified": self.certified,
            "euler_characteristic": self.euler_characteristic,
        }


def evaluate_word(gen_mats: np.ndarray, word) -> np.ndarray:
    m = np.eye(2)
    for x in word:
        g = gen_mats[abs(x) - 1]
        if x < 0:
            g = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])
        m = m @ g
    return m


def _inv(m):
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _unimodular(m):
    m = np.asarray(m, float)
    return m / math.sqrt(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


# ---------------------------------------------------------------- basepoint


def _basepoint_objective(mats):
    M = np.asarray(mats, float)

    def f(v):
        x, s = v
        y = math.exp(s)
        T = np.array([[math.sqrt(y), x / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])
        mm = _inv(T) @ M @ T
        return 0.5 * float(np.sum(mm * mm))
    return f


def _choose_basepoint(mats, start: complex) -> complex:
    """Minimizer of sum cosh d(z, m z): strictly convex, and nearest-point
    projection onto the convex core never increases a displacement, so the
    minimizer lies in the core."""
    f = _basepoint_objective(mats)
    res = minimize(f, [start.real, math.log(start.imag)], method="BFGS", options={"gtol": 1e-11})
    # polish; BFGS stalls a little short of the minimum in flat directions
    res = minimize(f, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
    x, s = res.x
    return complex(x, math.exp(s))


def _moving_map(z: complex) -> np.ndarray:
    """Matrix T with T(i) = z."""
    y = z.imag
    return np.array([[math.sqrt(y), z.real / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])


def finalize(gen_mats: list, boundary_words: list, spec, *, basepoint=None,
             boundary_lengths=None, meta=None, max_elements: int = 3_000_000) -> FuchsianSurface:
    """Normalize basepoint, pick nearby boundary conjugates, certify the
    Dirichlet domain and wrap everything in a FuchsianSurface."""
    gens = [_unimodular(m) for m in gen_mats]
    bwords = [W.reduce(w) for w in boundary_words]
    for k, w in enumerate(bwords):
        if not w:
            raise ConstructionError(f"boundary word {k} is trivial")
    if basepoint is None:
        uniq = []
        for w in [(k + 1,) for k in range(len(gens))] + bwords:
            if w not in uniq and W.inverse(w) not in uniq:
                uniq.append(w)
        objs = [evaluate_word(np.array(gens), w) for w in bwords]
        objs += [evaluate_word(np.array(gens), w) for w in uniq if w not in bwords]
        basepoint = _choose_basepoint(objs, perpendicular_foot(objs[0], objs[1])
                                      if len(bwords) > 1 else _any_axis_point(gens[0]))
        T = _moving_map(basepoint)
        Ti = _inv(T)
        gens = [Ti @ g @ T for g in gens]
    gm = np.array(gens)
    bmats = [evaluate_word(gm, w) for w in bwords]
    # replace each boundary word by the conjugate whose axis is nearest i
    small = ball_bfs(_steps(gm)[0], _steps(gm)[1], _small_radius(gm))
    new_words = []
    for w in bwords:
        best = None
        for u, um in zip(small.words, small.mats):
            cw = W.multiply(u, w, W.inverse(u))
            h = um @ evaluate_word(gm, w) @ _inv(um)
            L = axis_line(h)
            c = dist_i_to_line_cosh(L[0, 1], L[1, 0])
            key = (round(c, 12), W.shortlex_key(cw))
            if best is None or key < best[0]:
                best = (key, cw)
        new_words.append(best[1])
    bwords = new_words
    bmats = [evaluate_word(gm, w) for w in bwords]
    gen_words = [(k + 1,) for k in range(len(gens))]
    dom: DomainData = dirichlet_domain(gens, gen_words, bmats, max_elements=max_elements)
    lengths = tuple(translation_length(Isometry.from_matrix(h)) for h in bmats)
    if boundary_lengths is not None:
        for k, (a, b) in enumerate(zip(lengths, boundary_lengths)):
            if abs(a - b) > 1e-8:
                raise ConstructionError(f"boundary {k}: built length {a} != requested {b}")
    return FuchsianSurface(
        generators=tuple(Isometry.from_matrix(g, renormalize=False) for g in gens),
        boundary_words=tuple(bwords),
        basepoint=1j,
        face_pairings=tuple(Isometry.from_matrix(m) for m in dom.face_mats),
        face_words=tuple(dom.face_words),
        spec=spec,
        rho=dom.rho,
        certified=dom.certified,
        probe_radius=dom.probe_radius,
        boundary_lengths=lengths if boundary_lengths is None else tuple(boundary_lengths),
        meta=dict(meta or {}),
    )


def _steps(gm):
    mats, ws = [], []
    for k, g in enumerate(gm):
        mats += [g, _inv(g)]
        ws += [(k + 1,), (-(k + 1),)]
    return np.array(mats), ws


def _small_radius(gm):
    from .dirichlet import displacement
    return float(displacement(_steps(gm)[0]).max()) * 1.5 + 0.5


# ---------------------------------------------------------------- pants


def pants_matrices(l1: float, l2: float, l3: float):
    """Generators g1, g2 of the pants group with cuffs g1, g2, (g1 g2)^-1.

    g1 = diag(e^{l1/2}, e^{-l1/2}); g2 = [[p, q], [1, s]] solved from
    tr g2 = 2cosh(l2/2) and tr(g1 g2) = -2cosh(l3/2).
    """
    for v in (l1, l2, l3):
        if not v > 0:
            raise SpecError("pants lengths must be positive")
    a = math.exp(l1 / 2)
    y = 2 * math.cosh(l2 / 2)
    z = -2 * math.cosh(l3 / 2)
    p = (z - y / a) / (a - 1 / a)
    s = y - p
    q = p * s - 1
    g1 = np.diag([a, 1 / a])
    g2 = np.array([[p, q], [1.0, s]])
    return g1, g2


def build_pants(l1: float, l2: float, l3: float, max_elements: int = 3_000_000) -> FuchsianSurface:
    spec = SurfaceSpec("pants", (float(l1), float(l2), float(l3)))
    g1, g2 = pants_matrices(l1, l2, l3)
    return finalize([g1, g2], [(1,), (2,), (-2, -1)], spec,
                    boundary_lengths=spec.boundary_lengths, max_elements=max_elements)


# ---------------------------------------------------------------- gluing


def _normalizer(h: np.ndarray, ref: complex) -> np.ndarray:
    """Matrix N with N h N^-1 = diag(e^{l/2}, e^{-l/2}) (translating upward)
    and N(ref) = i, where ref lies on the axis of h."""
    rep, att = fixed_points(h)
    if math.isinf(att):
        N = np.array([[1.0, -rep], [0.0, 1.0]])
    elif math.isinf(rep):
        N = np.array([[0.0, -1.0], [1.0, -att]])
    else:
        N = np.array([[1.0, -rep], [1.0, -att]])
        if att - rep < 0:
            N = -N * np.array([[1, 1], [-1, -1]])
    N = _unimodular_signed(N)
    w = _mob(N, ref)
    s = abs(w)
    N = np.diag([1 / math.sqrt(s), math.sqrt(s)]) @ N
    return N


def _unimodular_signed(N):
    det = N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0]
    if det < 0:
        N = np.array([[-N[0, 0], -N[0, 1]], [N[1, 0], N[1, 1]]])
        det = -det
    return N / math.sqrt(det)


def _mob(m, z):
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def perpendicular_foot(h1: np.ndarray, h2: np.ndarray) -> complex:
    """Foot on axis(h1) of the common perpendicular to axis(h2)."""
    N = _normalizer(h1, _any_axis_point(h1))
    p, q = fixed_points(N @ h2 @ _inv(N))
    # perpendicular from the imaginary axis to the half-circle (p, q) lands at i sqrt(pq)
    if math.isinf(p) or math.isinf(q) or p * q <= 0:
        raise ConstructionError("axes are not disjoint")
    foot = 1j * math.sqrt(p * q)
    return _mob(_inv(N), foot)


def _any_axis_point(h):
    rep, att = fixed_points(h)
    if math.isinf(att):
        return complex(rep, 1.0)
    if math.isinf(rep):
        return complex(att, 1.0)
    c, r = (rep + att) / 2, abs(att - rep) / 2
    return complex(c, r)


def gluing_map(h_target: np.ndarray, ref_target: complex, h_source: np.ndarray,
               ref_source: complex, twist: float) -> np.ndarray:
    """K with K h_source K^-1 = h_target^-1 sending ref_source to the point at
    signed distance ``twist`` from ref_target along h_target's direction."""
    Nx = _normalizer(h_target, ref_target)
    Ny = _normalizer(h_source, ref_source)
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    D = np.diag([math.exp(twist / 2), math.exp(-twist / 2)])
    K = _inv(Nx) @ D @ R @ Ny
    chk = K @ h_source @ _inv(K) @ h_target
    if np.max(np.abs(chk - np.eye(2))) > 1e-8 * max(1.0, np.max(np.abs(h_target))) ** 2 and \
            np.max(np.abs(chk + np.eye(2))) > 1e-8 * max(1.0, np.max(np.abs(h_target))) ** 2:
        raise ConstructionError("gluing map failed to conjugate the cuffs")
    return K


@dataclass
class _Block:
    cuffs: list  # three matrices in the current frame


def _substitute(word, a: int, repl) -> tuple:
    out = []
    for x in word:
        if x == a:
            out.extend(repl)
        elif x == -a:
            out.extend(W.inverse(repl))
        else:
            out.append(x)
    return W.reduce(out)


class _Assembler:
    """Incremental amalgam / HNN assembly of pants blocks.

    Keeps a free basis ("letters") in which every free cuff except one, the
    product cuff, is a single letter.  During the tree stage the product cuff
    contains every letter exactly once, which makes the basis changes below
    single substitutions.
    """

    def __init__(self):
        self.letters: list = []
        self.free: dict = {}
        self.blocks: dict = {}

    def mat(self, word):
        return evaluate_word(np.array(self.letters), word)

    def _ref(self, cuff, toward=None):
        pid, c = cuff
        cuffs = self.blocks[pid].cuffs
        t = (c + 1) % 3 if toward is None else toward
        return perpendicular_foot(cuffs[c], cuffs[t])

    def _rewrite(self, a, repl):
        for k, w in self.free.items():
            self.free[k] = _substitute(w, a, repl)

    def start(self, pid, lengths):
        g1, g2 = pants_matrices(*lengths)
        self.blocks[pid] = _Block([g1, g2, _inv(g1 @ g2)])
        self.letters = [g1, g2]
        self.free = {(pid, 0): (1,), (pid, 1): (2,), (pid, 2): (-2, -1)}

    def product_cuff(self):
        for k, w in self.free.items():
            if len(w) != 1:
                return k
        return None

    def attach(self, x, qid, y, lengths, twist):
        """Glue cuff y of a fresh pants (lengths) to the free cuff x."""
        g1, g2 = pants_matrices(*lengths)
        qc = [g1, g2, _inv(g1 @ g2)]
        hx = self.mat(self.free[x])
        K = gluing_map(hx, self._ref(x), qc[y], perpendicular_foot(qc[y], qc[(y + 1) % 3]), twist)
        Ki = _inv(K)
        cuffs = [K @ c @ Ki for c in qc]
        self.blocks[qid] = _Block(cuffs)
        z, w = (y + 1) % 3, (y + 2) % 3
        wx = self.free.pop(x)
        self.letters.append(cuffs[z])
        n = len(self.letters)
        # c_y c_z c_w = 1 in the block and K c_y K^-1 = hx^-1, so w = z^-1 hx
        self.free[(qid, z)] = (n,)
        if len(wx) == 1:
            a, sgn = abs(wx[0]), wx[0] > 0
            # w = z^-1 a^s: redefine letter a as w, then old a^s = z a_new
            self.letters[a - 1] = cuffs[w] if sgn else _inv(cuffs[w])
            self._rewrite(a, (n, a) if sgn else (-a, -n))
            self.free[(qid, w)] = (a,) if sgn else (-a,)
        else:
            self.free[(qid, w)] = W.multiply((-n,), wx)

    def make_product(self, leg):
        """Move the product role onto the free cuff ``leg``."""
        p = self.product_cuff()
        if p is None or p == leg:
            return
        pw = self.free[p]
        lw = self.free[leg]
        a = abs(lw[0])
        pos = [k for k, x in enumerate(pw) if abs(x) == a]
        if len(pos) != 1:
            raise ConstructionError("product cuff does not contain the leg letter once")
        k = pos[0]
        X, e, Y = pw[:k], pw[k], pw[k + 1:]
        self.letters[a - 1] = self.mat(pw)
        # old a^e = X^-1 P Y^-1 with P the new letter a
        rep = W.multiply(W.inverse(X), (a,), W.inverse(Y))
        if e < 0:
            rep = W.inverse(rep)
        self._rewrite(a, rep)
        self.free[p] = (a,)

    def hnn(self, u, v, twist, toward=(None, None)):
        """Glue free letter cuffs u (target) and v (source) with a new stable letter."""
        wu, wv = self.free[u], self.free[v]
        if len(wu) != 1 or len(wv) != 1:
            raise ConstructionError("unsupported gluing pattern: HNN cuffs must be letters")
        hu, hv = self.mat(wu), self.mat(wv)
        J = gluing_map(hu, self._ref(u, toward[0]), hv, self._ref(v, toward[1]), twist)
        a, sv = abs(wv[0]), wv[0] > 0
        self.letters[a - 1] = J
        # hv = J^-1 hu^-1 J, so old v^s = J^-1 wu^-1 J
        rep = W.multiply((-a,), W.inverse(wu), (a,))
        if not sv:
            rep = W.inverse(rep)
        del self.free[u], self.free[v]
        self._rewrite(a, rep)


def assemble_pants_graph(graph: PantsGraph, toward: dict | None = None):
    """Letters and leg words of the glued group, legs in graph order."""
    lengths = {}
    for e in graph.gluings:
        lengths[(e.pants_a, e.cuff_a)] = e.length
        lengths[(e.pants_b, e.cuff_b)] = e.length
    for l in graph.legs:
        lengths[(l.pants, l.cuff)] = l.length
    plen = {p: tuple(lengths[(p, c)] for c in range(3)) for p in range(graph.pants)}
    asm = _Assembler()
    asm.start(0, plen[0])
    built = {0}
    tree, extra = [], []
    queue = deque([0])
    while queue:
        p = queue.popleft()
        for e in graph.gluings:
            for (pa, ca, pb, cb) in ((e.pants_a, e.cuff_a, e.pants_b, e.cuff_b),
                                     (e.pants_b, e.cuff_b, e.pants_a, e.cuff_a)):
                if pa == p and pb not in built and e not in tree:
                    built.add(pb)
                    tree.append(e)
                    asm.attach((pa, ca), pb, cb, plen[pb], e.twist)
                    queue.append(pb)
    extra = [e for e in graph.gluings if e not in tree]
    leg_cuffs = [(l.pants, l.cuff) for l in graph.legs]
    asm.make_product(leg_cuffs[-1])
    toward = dict(toward or {})
    for e in graph.gluings:
        # a pants glued to itself: seams from both glued cuffs run to the
        # remaining cuff, matching the one-holed torus convention
        if e.pants_a == e.pants_b:
            third = 3 - e.cuff_a - e.cuff_b
            toward.setdefault((e.pants_a, e.cuff_a), third)
            toward.setdefault((e.pants_b, e.cuff_b), third)
    for e in extra:
        u, v = (e.pants_a, e.cuff_a), (e.pants_b, e.cuff_b)
        asm.hnn(u, v, e.twist, (toward.get(u), toward.get(v)))
    return asm.letters, [asm.free[c] for c in leg_cuffs]


def build_from_pants_graph(spec: SurfaceSpec, max_elements: int = 3_000_000) -> FuchsianSurface:
    if spec.kind == "pants":
        return build_pants(*spec.boundary_lengths, max_elements=max_elements)
    if spec.kind == "one_holed_torus":
        (la, tw), = spec.interior_curves
        return build_one_holed_torus(la, tw, spec.boundary_lengths[0], max_elements=max_elements)
    letters, legs = assemble_pants_graph(spec.graph)
    return finalize(letters, legs, spec, boundary_lengths=spec.boundary_lengths,
                    max_elements=max_elements)


def build_one_holed_torus(l_alpha: float, twist: float, l_gamma: float,
                          max_elements: int = 3_000_000) -> FuchsianSurface:
    """One-holed torus: pants(l_alpha, l_alpha, l_gamma) with its two alpha
    cuffs glued.  Generators A (translation length l_alpha) and
    B = twist_along(A, twist) J, where J g2 J^-1 = A^-1; boundary word [A, B]."""
    spec = SurfaceSpec("one_holed_torus", (float(l_gamma),), ((float(l_alpha), float(twist)),))
    graph = PantsGraph(1, (Gluing(0, 0, 0, 1, float(l_alpha), float(twist)),),
                       (Leg(0, 2, float(l_gamma)),))
    # reference seams run from each alpha cuff to gamma, so that twist 0 is
    # the position where the shortest ortho geodesic crossing alpha is
    # shortest (it is then the union of the two gamma-alpha seams)
    letters, legs = assemble_pants_graph(graph, toward={(0, 0): 2, (0, 1): 2})
    bw = W.conjugacy_key(legs[0])
    # the leg word is a cyclic rotation of [A, B] = A B A^-1 B^-1
    if W.conjugacy_key((1, 2, -1, -2)) != bw:
        raise ConstructionError(f"unexpected torus boundary word {legs[0]}")
    return finalize(letters, [(1, 2, -1, -2)], spec, boundary_lengths=(float(l_gamma),),
                    max_elements=max_elements)


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    ok: bool
    checks: dict
    worst: str = ""

    def to_json_obj(self):
        return {"ok": self.ok, "checks": self.checks, "worst": self.worst}


def validate_surface(surface: FuchsianSurface, radius: float | None = None) -> ValidationReport:
    """Boundary lengths, disjointness of boundary lifts and absence of
    elliptic elements in a group ball."""
    checks = {}
    worst = ""
    gm = surface.gen_mats
    # boundary lengths
    errs = []
    for k, w in enumerate(surface.boundary_words):
        h = evaluate_word(gm, w)
        tr = abs(h[0, 0] + h[1, 1])
        if tr <= 2:
            errs.append(math.inf)
            continue
        errs.append(abs(2 * math.acosh(tr / 2) - surface.boundary_lengths[k]))
    berr = max(errs) if errs else 0.0
    checks["boundary_length_error"] = berr
    ok = berr <= 1e-8
    if not ok:
        worst = f"boundary length error {berr:.3e}"
    # ball audit
    R = radius if radius is not None else max(min(surface.probe_radius, 8.0), 1.0)
    steps, sw = _steps(gm)
    try:
        if surface.meta.get("cover") is not None:
            from .ortho_enum import group_ball
            ball = group_ball(surface, R, max_elements=200_000)
        else:
            ball = ball_bfs(steps, sw, R, max_elements=200_000)
    except Exception as exc:  # resource cap
        # an overflowing ball at small radius hints at non-discreteness;
        # look for an elliptic among short words instead
        checks["ball"] = f"skipped: {exc}"
        ell = _short_word_elliptics(gm, max_len=8)
        checks["elliptic_short_words"] = ell
        if ell:
            ok = False
            worst = worst or f"{ell} elliptic words of length <= 8"
        return ValidationReport(ok, checks, worst)
    tr = np.abs(ball.mats[:, 0, 0] + ball.mats[:, 1, 1])
    nonid = np.array([len(w) > 0 for w in ball.words])
    ell = int(np.sum((tr < 2 - 1e-9) & nonid))
    par = int(np.sum((np.abs(tr - 2) <= 1e-9) & nonid))
    checks["elliptic_in_ball"] = ell
    checks["parabolic_in_ball"] = par
    if ell or par:
        ok = False
        worst = worst or f"{ell} elliptic / {par} parabolic elements in ball of radius {R:.3f}"
    # boundary lifts pairwise disjoint
    lifts = []
    for k, w in enumerate(surface.boundary_words):
        h = evaluate_word(gm, w)
        p, q = fixed_points(h)
        for g in ball.mats[:400]:
            lifts.append(tuple(sorted((_act_real(g, p), _act_real(g, q)))))
    crossing = 0
    lifts = sorted(set(lifts))
    for i in range(len(lifts)):
        a, b = lifts[i]
        for j in range(i + 1, len(lifts)):
            c, d = lifts[j]
            if _same(a, c) and _same(b, d):
                continue
            if (a < c < b < d) or (c < a < d < b):
                if min(abs(c - a), abs(b - c), abs(d - b)) > 1e-9 * max(1, abs(a), abs(d)):
                    crossing += 1
    checks["crossing_boundary_lifts"] = crossing
    if crossing:
        ok = False
        worst = worst or f"{crossing} crossing boundary-lift pairs"
    checks["certified_domain"] = surface.certified
    return ValidationReport(ok, checks, worst)


def _short_word_elliptics(gm, max_len: int) -> int:
    steps, _ = _steps(gm)
    n = len(steps)
    count = 0
    # frontier of reduced words as (matrix, last step index)
    front = [(steps[k], k) for k in range(n)]
    for _ in range(max_len):
        nxt = []
        for m, last in front:
            if abs(m[0, 0] + m[1, 1]) < 2 - 1e-9:
                count += 1
            for k in range(n):
                if k != (last ^ 1):  # steps come in (g, g^-1) pairs
                    nxt.append((m @ steps[k], k))
        front = nxt
    return count


def _same(x, y):
    return abs(x - y) <= 1e-9 * max(1.0, abs(x), abs(y))


def _act_real(g, x):
    if math.isinf(x):
        return g[0, 0] / g[1, 0] if g[1, 0] != 0 else math.inf
    den = g[1, 0] * x + g[1, 1]
    return (g[0, 0] * x + g[0, 1]) / den if den != 0 else math.inf


def dirichlet_face_pairings(surface: FuchsianSurface, probe_radius: float | None = None) -> list:
    """Face pairings of the Dirichlet domain at the basepoint (clipped to the
    convex core), recomputed and certified by a 25% probe-radius increase."""
    bm = [surface.boundary_matrix(i) for i in range(len(surface.boundary_words))]
    gw = [(k + 1,) for k in range(surface.rank)]
    dom = dirichlet_domain(list(surface.gen_mats), gw, bm)
    if probe_radius is not None and probe_radius > dom.probe_radius:
        dom = dirichlet_domain(list(surface.gen_mats), gw, bm)
    if not dom.certified:
        from .dirichlet import UncertifiedDomainError
        raise UncertifiedDomainError("face set changed under a 25% probe-radius increase")
    return [Isometry.from_matrix(m) for m in dom.face_mats]


def surface_from_json_obj(d: dict) -> FuchsianSurface:
    """Rebuild a surface from its serialized form (the SurfaceSpec is authoritative;
    stored matrices are compared for consistency)."""
    if d.get("schema") != SCHEMA_SURFACE:
        raise SpecError(f"schema: expected {SCHEMA_SURFACE}")
    spec = d["spec"]
    if "base" in spec:
        from .covers import cover_from_json_obj
        return cover_from_json_obj(spec)
    return build_from_pants_graph(SurfaceSpec.from_json_obj(spec))
