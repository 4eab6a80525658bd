"""Finite cyclic covers: kernels of homomorphisms to Z/n via
Reidemeister-Schreier, and the cyclic-cover family of a special one-holed
torus whose covers share an ortho spectrum but not a systole."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import words as W
from .hyp_core import Isometry
from .surfaces import (
    FuchsianSurface,
    SpecError,
    SurfaceSpec,
    build_from_pants_graph,
    build_one_holed_torus,
    evaluate_word,
)


class DisconnectedCoverError(ValueError):
    """The homomorphism is not surjective, so the cover is disconnected."""


@dataclass(frozen=True)
class CosetTable:
    """Action of the generators on the cosets Z/n of a cyclic kernel.

    ``transversal[c]`` is the shortlex-first word reaching coset c; the tree
    edges of the transversal are the trivial Schreier generators.
    """

    degree: int
    images: tuple
    transversal: tuple

    def act(self, c: int, x: int) -> int:
        r = self.images[abs(x) - 1]
        return (c + r) % self.degree if x > 0 else (c - r) % self.degree

    def permutation(self, k: int) -> tuple:
        return tuple(self.act(c, k + 1) for c in range(self.degree))


@dataclass(frozen=True)
class CyclicCoverSpec:
    base: FuchsianSurface
    k: int
    m: int

    def __post_init__(self):
        if self.base.spec_obj().get("kind") != "one_holed_torus":
            raise SpecError("base: cyclic cover family needs a one-holed torus base")
        if not (0 <= self.m <= self.k):
            raise SpecError("m: need 0 <= m <= k")


def coset_table(images, modulus: int) -> CosetTable:
    n = int(modulus)
    if n < 1:
        raise ValueError("modulus must be positive")
    imgs = tuple(int(r) % n for r in images)
    g = n
    for r in imgs:
        g = math.gcd(g, r)
    if g != 1 and n > 1:
        raise DisconnectedCoverError(f"images {imgs} generate a proper subgroup of Z/{n}")
    letters = []
    for k in range(len(imgs)):
        letters += [k + 1, -(k + 1)]
    trans = {0: ()}
    queue = deque([0])
    while queue:
        c = queue.popleft()
        for x in letters:
            r = imgs[abs(x) - 1]
            d = (c + r) % n if x > 0 else (c - r) % n
            if d not in trans:
                trans[d] = trans[c] + (x,)
                queue.append(d)
    return CosetTable(n, imgs, tuple(trans[c] for c in range(n)))


def schreier_generators(table: CosetTable):
    """Nontrivial Schreier generators t_c x t_{c x}^-1 as (coset, letter, word),
    in coset-major order; they freely generate the kernel."""
    out = []
    rank = len(table.images)
    for c in range(table.degree):
        for k in range(rank):
            x = k + 1
            d = table.act(c, x)
            w = W.multiply(table.transversal[c], (x,), W.inverse(table.transversal[d]))
            if w:
                out.append((c, x, w))
    return out


def rewrite(word, table: CosetTable, index: dict) -> tuple:
    """Rewrite a kernel element (word in the base generators) as a word in
    the Schreier generators; ``index`` maps (coset, letter) -> generator id."""
    c = 0
    out = []
    for x in word:
        if x > 0:
            key = (c, x)
            if key in index:
                out.append(index[key])
            c = table.act(c, x)
        else:
            c2 = table.act(c, x)
            key = (c2, -x)
            if key in index:
                out.append(-index[key])
            c = c2
    if c != 0:
        raise ValueError("word is not in the kernel")
    return W.reduce(out)


@dataclass(frozen=True)
class CoverData:
    """How a cover sits over its base: the kernel of ``images`` mod ``degree``.

    ``lifts[i] = (b, q, t)`` says boundary component i of the cover is
    t b^q t^-1 for base boundary word b (index), with t a transversal word.
    """

    base: FuchsianSurface
    table: CosetTable
    index: dict
    lifts: tuple

    @property
    def degree(self) -> int:
        return self.table.degree

    def residues(self, words) -> np.ndarray:
        im = self.table.images
        n = self.table.degree
        return np.array([sum(im[x - 1] if x > 0 else -im[-x - 1] for x in w) % n for w in words],
                        dtype=np.int64)

    def residue(self, word) -> int:
        return int(self.residues([word])[0])

    def to_cover_word(self, word) -> tuple:
        """Kernel element given as a base word, rewritten in Schreier generators."""
        return rewrite(word, self.table, self.index)


def subgroup_from_cyclic_hom(surface: FuchsianSurface, images, modulus: int, *,
                             spec: dict | None = None) -> FuchsianSurface:
    """Kernel of the homomorphism generator_k -> images[k] mod ``modulus``.

    The cover keeps the base basepoint. Boundary components are the lifts
    t_c b^q t_c^-1 over the orbits of each base boundary word b, with q the
    additive order of its residue. Enumeration on the cover runs over the
    base tiling: a base ball filtered to the kernel is a complete kernel
    ball, so the base certificate carries over.
    """
    if len(images) != surface.rank:
        raise ValueError("need one residue per generator")
    if surface.meta.get("cover") is not None:
        raise ValueError("covers of covers are not supported; compose the homomorphisms instead")
    table = coset_table(images, modulus)
    n = table.degree
    if n == 1:
        return surface
    sg = schreier_generators(table)
    index = {(c, x): k + 1 for k, (c, x, _) in enumerate(sg)}
    gm = surface.gen_mats
    new_gens = [evaluate_word(gm, w) for (_, _, w) in sg]
    bwords, blens, lifts = [], [], []
    for b, (bw, bl) in enumerate(zip(surface.boundary_words, surface.boundary_lengths)):
        r = sum(table.images[abs(x) - 1] * (1 if x > 0 else -1) for x in bw) % n
        q = n // math.gcd(n, r) if r else 1
        seen = set()
        for c in range(n):
            if c in seen:
                continue
            seen |= {(c + j * r) % n for j in range(q)}
            t = table.transversal[c]
            lift = W.multiply(t, W.power(bw, q), W.inverse(t))
            bwords.append(rewrite(lift, table, index))
            blens.append(q * bl)
            lifts.append((b, q, t))
    if spec is None:
        spec = {"base": surface.spec_obj(), "images": list(table.images), "modulus": n}
    data = CoverData(surface, table, index, tuple(lifts))
    rho = _sheet_radius(surface, data) + surface.rho
    gens = tuple(Isometry.from_matrix(m) for m in new_gens)
    return FuchsianSurface(
        generators=gens,
        boundary_words=tuple(bwords),
        basepoint=1j,
        face_pairings=tuple(gens) + tuple(g.inverse() for g in gens),
        face_words=tuple([(k + 1,) for k in range(len(gens))] + [(-(k + 1),) for k in range(len(gens))]),
        spec=spec,
        rho=rho,
        certified=surface.certified,
        probe_radius=surface.probe_radius,
        boundary_lengths=tuple(blens),
        meta={"degree": n, "cover": data},
    )


def _sheet_radius(base: FuchsianSurface, data: CoverData) -> float:
    """max over cosets of the least displacement of an element in that coset;
    the union of those translates of the base domain is a fundamental domain
    for the kernel."""
    from .ortho_enum import group_ball
    n = data.degree
    R = max(1.0, 2 * base.rho)
    while True:
        ball = group_ball(base, R)
        res = data.residues(ball.words)
        best = {}
        disp = np.arccosh(np.maximum(ball.cosh, 1.0))
        for r, dd in zip(res, disp):
            if r not in best:
                best[int(r)] = float(dd)
        if len(best) == n:
            return max(best.values())
        R *= 1.5


def build_special_X(n: int, l_gamma: float, **kw) -> FuchsianSurface:
    """One-holed torus with l_alpha = arccosh(3/2)/n, twist 0, boundary l_gamma."""
    if n < 1:
        raise SpecError("n: must be a positive integer")
    return build_one_holed_torus(math.acosh(1.5) / n, 0.0, l_gamma, **kw)


def cover_family(k: int, m: int, base: FuchsianSurface) -> FuchsianSurface:
    """Degree 2^k cover for alpha -> 2^m, beta -> 1 mod 2^k."""
    CyclicCoverSpec(base, k, m)
    n = 2 ** k
    spec = {"base": base.spec_obj(), "k": int(k), "m": int(m)}
    return subgroup_from_cyclic_hom(base, [(2 ** m) % n, 1], n, spec=spec)


def cover_from_json_obj(d: dict) -> FuchsianSurface:
    base = build_from_pants_graph(SurfaceSpec.from_json_obj(d["base"]))
    if "k" in d:
        return cover_family(int(d["k"]), int(d["m"]), base)
    return subgroup_from_cyclic_hom(base, list(d["images"]), int(d["modulus"]), spec=d)
