"""Quantities computed from ortho spectra: granulosity, Poincare partial
sums, growth exponents, interval radii of boundary lifts, spectrum
comparison, one-holed-torus reconstruction, a McKean-type systole bound and
the pinching experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .hyp_core import pants_boundary_distance
from .identities import _pairwise_sum, basmajian_term
from .ortho_enum import OrthoSpectrum, boundary_frames, boundary_lifts, ortho_spectrum
from .surfaces import FuchsianSurface, build_one_holed_torus, build_pants

MATCH_TOL = 1e-7


class InsufficientDataError(ValueError):
    """Not enough spectral data for the requested estimate."""


class InsufficientCutoffError(InsufficientDataError):
    """The spectrum cutoff is too small for the requested reconstruction."""


class ReconstructionError(ValueError):
    """The spectrum is inconsistent with a one-holed torus."""


def _lengths(S) -> np.ndarray:
    if isinstance(S, OrthoSpectrum):
        return S.lengths
    return np.sort(np.asarray(S, float))


# ---------------------------------------------------------------- granulosity


def granulosity(S, L: float, consecutive: bool = False) -> float:
    """inf of cosh(y/2)/cosh(x/2) over distinct values x < y < L of S.

    Returns ``inf`` with fewer than two distinct values.  Because the ratio
    is multiplicative along a chain x < z < y, the infimum over all pairs is
    attained by a consecutive pair, so ``consecutive`` gives the same value;
    the flag exists to make that explicit in reports.
    """
    v = np.unique(_lengths(S))
    v = v[v < L]
    if len(v) < 2:
        return math.inf
    c = np.cosh(v / 2)
    return float(np.min(c[1:] / c[:-1]))


def min_ratio_above(S, L: float, floor: float = 2.0) -> float:
    """Least cosh(y/2)/cosh(x/2) exceeding ``floor`` over values x < y <= L."""
    v = np.unique(_lengths(S))
    v = v[v <= L]
    if len(v) < 2:
        return math.inf
    c = np.cosh(v / 2)
    k = np.searchsorted(c, floor * c, side="right")
    ok = k < len(c)
    if not np.any(ok):
        return math.inf
    return float(np.min(c[k[ok]] / c[ok]))


# ---------------------------------------------------------------- Poincare series


def poincare_partial(spectrum, h: float) -> float:
    """Sum of exp(-h l) over the entries (tree summation)."""
    ls = _lengths(spectrum)
    if len(ls) == 0:
        return 0.0
    return _pairwise_sum(np.exp(-h * ls))


@dataclass
class ExponentFit:
    """Estimate of a growth exponent from finite data.

    Parameters
    ----------
    estimate : float
    window : tuple
        Range of the abscissa used by the fit (lengths, or -ln r).
    residual : float
        RMS residual of the least-squares line.
    method : str
        ``"counting-slope"``, ``"partial-sum-divergence"`` or ``"packing-count"``.
    """

    estimate: float
    window: tuple
    residual: float
    method: str
    details: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"estimate": self.estimate, "window": list(self.window), "residual": self.residual,
                "method": self.method, "details": self.details}


def _local_slopes(x: np.ndarray, y: np.ndarray, span: float) -> np.ndarray:
    """Least-squares slope of y over each window [x - span/2, x + span/2]."""
    out = np.empty(len(x))
    for k, c in enumerate(x):
        m = np.abs(x - c) <= span / 2 + 1e-12
        if m.sum() < 2:
            out[k] = np.nan
            continue
        out[k] = np.polyfit(x[m], y[m], 1)[0]
    return out


def _stable_window(x: np.ndarray, s: np.ndarray, rel: float = 0.10, min_points: int = 4):
    """Largest contiguous run of grid points whose local slopes ``s`` stay
    within ``rel`` of each other (ties go to the later run).  Returns
    (i0, i1) inclusive, or None."""
    best = None
    n = len(s)
    for i in range(n):
        lo = hi = s[i]
        if not lo > 0:
            continue
        for j in range(i, n):
            if not s[j] > 0:
                break
            lo, hi = min(lo, s[j]), max(hi, s[j])
            if hi > (1 + rel) * lo:
                break
            if j - i + 1 >= min_points:
                if best is None or (x[j] - x[i], x[j]) >= (x[best[1]] - x[best[0]], x[best[1]]):
                    best = (i, j)
    return best


def _line_fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


def _family(spectra):
    if isinstance(spectra, OrthoSpectrum):
        raise InsufficientDataError("need spectra at >= 4 increasing cutoffs")
    fam = sorted(spectra, key=lambda s: s.cutoff)
    if len(fam) < 4:
        raise InsufficientDataError(f"need spectra at >= 4 increasing cutoffs, got {len(fam)}")
    cut = np.array([s.cutoff for s in fam], float)
    if np.any(np.diff(cut) <= 0):
        raise InsufficientDataError("cutoffs must be strictly increasing")
    N = np.array([len(s) for s in fam], float)
    if np.any(N <= 0):
        raise InsufficientDataError("empty spectrum in the family")
    return fam, cut, N


def ortho_exponent(spectra, grid_step: float = 0.25, span: float = 3.0) -> ExponentFit:
    """Exponential growth rate of the counting function N(L).

    ``spectra`` are spectra of one surface at >= 4 increasing cutoffs.  ln N
    is sampled on a grid over the cutoff range (counts from the largest
    spectrum), local slopes are least-squares slopes over a sliding span, and
    the exponent is the slope fitted over the largest window where the local
    slope varies by less than 10%.  Counting functions of ortho spectra
    oscillate at unit scale, hence the span.
    """
    fam, cut, N = _family(spectra)
    ls = fam[-1].lengths
    grid = np.arange(cut[0], cut[-1] + 1e-9, grid_step)
    counts = np.searchsorted(ls, grid, side="right").astype(float)
    m = counts > 0
    x, y = grid[m], np.log(counts[m])
    s = _local_slopes(x, y, span)
    w = _stable_window(x, s, min_points=max(4, int(span / grid_step)))
    if w is None:
        raise InsufficientDataError("no window with stable counting slope")
    i0, i1 = w
    slope, _, res = _line_fit(x[i0:i1 + 1], y[i0:i1 + 1])
    return ExponentFit(slope, (float(x[i0]), float(x[i1])), res, "counting-slope",
                       {"cutoffs": cut.tolist(), "counts": N.astype(int).tolist()})


def divergence_exponent(spectra, t_bracket=(0.0, 2.0)) -> ExponentFit:
    """Critical t of the Poincare partial sums: the t at which the increments
    of sum exp(-t l) over successive cutoff shells stop growing."""
    fam, cut, N = _family(spectra)
    ls = fam[-1].lengths
    edges = np.linspace(cut[0], cut[-1], max(4, int(round(cut[-1] - cut[0]))) + 1)
    idx = np.searchsorted(ls, edges, side="right")
    mid = 0.5 * (edges[1:] + edges[:-1])

    def slope(t):
        P = np.array([_pairwise_sum(np.exp(-t * ls[:k])) for k in idx])
        inc = np.diff(P)
        ok = inc > 0
        if ok.sum() < 3:
            raise InsufficientDataError("too few nonempty shells")
        s, _, _ = _line_fit(mid[ok], np.log(inc[ok]))
        return s

    a, b = t_bracket
    sa, sb = slope(a), slope(b)
    if sa <= 0 or sb >= 0:
        raise InsufficientDataError("divergence boundary not bracketed")
    t = brentq(slope, a, b, xtol=1e-10)
    return ExponentFit(float(t), (float(mid[0]), float(mid[-1])), 0.0, "partial-sum-divergence",
                       {"cutoffs": cut.tolist()})


# ---------------------------------------------------------------- interval radii


def _mob(m, x):
    if math.isinf(x):
        return m[0, 0] / m[1, 0] if m[1, 0] != 0 else math.inf
    den = m[1, 0] * x + m[1, 1]
    return (m[0, 0] * x + m[0, 1]) / den if den != 0 else math.inf


def boundary_interval_radii(surface: FuchsianSurface, R: float, component: int = 0,
                            with_feet: bool = False):
    """(Euclidean radius, perpendicular distance) of every other boundary lift
    after normalizing a lift of ``component`` to Geodesic(-1, 1).

    Lifts come from the group ball of radius R; the normalization puts the
    convex core inside the unit half-disk.  With ``with_feet`` each item also
    carries the signed foot position of the perpendicular on Geodesic(-1, 1),
    measured from its top point i.
    """
    _, N, _, _, _, _ = boundary_frames(surface)[component]
    out = []
    for g, _, _ in boundary_lifts(surface, R):
        # frame where the normalized lift is (0, inf); z -> (z-1)/(z+1) then
        # sends it to (-1, 1), and z -> -z (the inversion -1/w on that side)
        # moves lifts on the negative side inside the unit disk
        a, b = abs(_mob(N, g.p)), abs(_mob(N, g.q))
        if a > b:
            a, b = b, a
        if not a / b > 1e-16:
            continue  # the normalized lift itself, up to rounding
        r = (b - a) / ((a + 1) * (b + 1))
        l = 2 * math.atanh(math.sqrt(a / b))
        item = (r, l, 0.5 * math.log(a * b)) if with_feet else (r, l)
        out.append(item)
    out.sort(key=lambda t: (-t[0], t[1]))
    return out


def radius_constant(items, period: float | None = None) -> float:
    """C = max of e^(-l)/r, so that e^(-l)/C <= r <= e^(-l).

    Translates along the normalized lift shrink r at fixed l, so with
    ``period`` only lifts whose perpendicular foot lies within half a period
    of the reference point count (items must then carry feet)."""
    if period is not None:
        items = [t for t in items if abs(t[2]) <= period / 2 + 1e-9]
    if not items:
        raise InsufficientDataError("no boundary lifts")
    return float(max(math.exp(-t[1]) / t[0] for t in items))


def packing_exponent(radii, min_count: int = 50, grid_step: float = 0.25,
                     span: float = 3.0) -> ExponentFit:
    """Slope of ln #{radii >= r} against -ln r over the stable window.

    Radii whose count grows only polynomially in -ln r (log-log slope below
    1.5 over the window, e.g. a geometric sequence) are rejected as
    degenerate."""
    r = np.sort(np.asarray(radii, float))[::-1]
    if len(r) < min_count:
        raise InsufficientDataError(f"need >= {min_count} radii, got {len(r)}")
    if np.any(~(r > 0)):
        raise ValueError("radii must be positive")
    x = -np.log(r)
    grid = np.arange(x[0], x[-1] + 1e-9, grid_step)
    counts = np.searchsorted(x, grid, side="right").astype(float)
    y = np.log(counts)
    s = _local_slopes(grid, y, span)
    w = _stable_window(grid, s, min_points=max(4, int(span / grid_step)))
    if w is None:
        raise InsufficientDataError("degenerate radii: no window of exponential count growth")
    i0, i1 = w
    slope, _, res = _line_fit(grid[i0:i1 + 1], y[i0:i1 + 1])
    xm = 0.5 * (grid[i0] + grid[i1])
    loglog = slope * xm
    if loglog < 1.5:
        raise InsufficientDataError(
            f"degenerate radii: count grows polynomially in -ln r (log-log slope {loglog:.3g})")
    return ExponentFit(slope, (float(grid[i0]), float(grid[i1])), res, "packing-count",
                       {"n_radii": int(len(r)), "loglog_slope": float(loglog)})


# ---------------------------------------------------------------- comparison


@dataclass
class SpectrumComparison:
    verdict: str  # "isospectral" | "distinct"
    cutoff: float
    tol: float
    max_discrepancy: float
    counts: tuple
    first_discrepancy: dict | None = None

    @property
    def isospectral(self) -> bool:
        return self.verdict == "isospectral"

    def to_json_obj(self) -> dict:
        return {"verdict": self.verdict, "cutoff": self.cutoff, "tol": self.tol,
                "max_discrepancy": self.max_discrepancy, "counts": list(self.counts),
                "first_discrepancy": self.first_discrepancy}


def compare_spectra(A, B, tol: float = 1e-8) -> SpectrumComparison:
    """Sorted one-to-one matching below the common cutoff.

    Entries within ``tol`` of the cutoff are dropped from both sides so a
    length sitting on the cutoff cannot fake a count mismatch."""
    L = min(A.cutoff, B.cutoff)
    a, b = A.lengths, B.lengths
    a = np.sort(a[a <= L - tol])
    b = np.sort(b[b <= L - tol])
    if len(a) != len(b):
        n = min(len(a), len(b))
        diff = np.nonzero(np.abs(a[:n] - b[:n]) > tol)[0]
        k = int(diff[0]) if len(diff) else n
        first = {"index": k, "a": float(a[k]) if k < len(a) else None,
                 "b": float(b[k]) if k < len(b) else None}
        return SpectrumComparison("distinct", float(L), tol, math.inf, (len(a), len(b)), first)
    if len(a) == 0:
        return SpectrumComparison("isospectral", float(L), tol, 0.0, (0, 0))
    d = np.abs(a - b)
    mx = float(d.max())
    if mx > tol:
        k = int(np.nonzero(d > tol)[0][0])
        return SpectrumComparison("distinct", float(L), tol, mx, (len(a), len(b)),
                                  {"index": k, "a": float(a[k]), "b": float(b[k])})
    return SpectrumComparison("isospectral", float(L), tol, mx, (len(a), len(b)))


# ---------------------------------------------------------------- one-holed tori


@dataclass
class TorusParams:
    """Fenchel-Nielsen data of a one-holed torus recovered from its spectrum.

    Parameters
    ----------
    l_gamma : float
        Boundary length.
    l_alpha : float
        Length of the simple closed geodesic disjoint from a shortest ortho.
    twist_abs : float
        Twist along alpha up to sign, in [0, l_alpha/2], zero when the
        shortest ortho crossing alpha is as short as possible.
    """

    l_gamma: float
    l_alpha: float
    twist_abs: float
    details: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"l_gamma": self.l_gamma, "l_alpha": self.l_alpha, "twist_abs": self.twist_abs,
                "details": self.details}


def pants_from_simple_pair(t: float, y: float):
    """(l_alpha, l_gamma) of P(l_alpha, l_alpha, l_gamma) whose simple
    gamma-gamma ortho has length t and whose once-around ortho has length y."""
    r = math.cosh(y / 2) / (2 * math.cosh(t / 2))
    if r <= 1:
        return None
    la = 2 * math.acosh(r)
    lg = 4 * math.asinh(math.cosh(la / 2) / math.sinh(t / 2))
    return la, lg


def _submultiset(small: np.ndarray, big: np.ndarray, tol: float):
    """Return big minus small (as sorted arrays) if small is contained in big
    up to tol, else None."""
    used = np.zeros(len(big), bool)
    for x in small:
        lo = np.searchsorted(big, x - tol, side="left")
        hi = np.searchsorted(big, x + tol, side="right")
        k = next((k for k in range(lo, hi) if not used[k]), None)
        if k is None:
            return None
        used[k] = True
    return big[~used]


def crossing_twist(c: float, l_alpha: float, l_gamma: float):
    """|twist| from the shortest crossing ortho c:
    cosh c = cosh^2 h + sinh^2 h cosh(twist), h = d(alpha, gamma) in
    P(l_alpha, l_alpha, l_gamma).  Returns (twist, resolution)."""
    h = pants_boundary_distance(l_alpha, l_gamma, l_alpha)
    # (cosh tw - 1)/2 = sinh((c+2h)/2) sinh((c-2h)/2) / sinh^2 h
    dc = 1e-13 * max(1.0, c)
    res = math.sqrt(2 * math.sinh(2 * h) * dc) / math.sinh(h)
    if c - 2 * h <= dc:
        return 0.0, res
    v = math.sinh((c + 2 * h) / 2) * math.sinh((c - 2 * h) / 2) / math.sinh(h) ** 2
    return 2 * math.asinh(math.sqrt(v)), res


def reconstruct_torus(spectrum: OrthoSpectrum, *, verify: bool = True, max_candidates: int = 40,
                      tol: float = MATCH_TOL) -> TorusParams:
    """Recover (l_gamma, l_alpha, |twist|) from a one-holed-torus spectrum.

    t = min of the spectrum is the simple ortho tau, disjoint from a simple
    closed geodesic alpha.  Each candidate y for the ortho going once around
    alpha fixes l_alpha and l_gamma through the pentagon relations; a
    candidate is accepted when the gamma-gamma spectrum of P(l_alpha,
    l_alpha, l_gamma) is contained in the input.  The least remaining length
    is the shortest ortho crossing alpha, which fixes |twist| in closed form;
    finally the torus is rebuilt and its spectrum compared with the input.
    """
    if spectrum.boundary_lengths and len(spectrum.boundary_lengths) != 1:
        raise ReconstructionError(f"spectrum has {len(spectrum.boundary_lengths)} boundary "
                                  "components; a one-holed torus has one")
    if any(e.boundary_pair != (0, 0) for e in spectrum.entries):
        raise ReconstructionError("spectrum has entries between different boundary components")
    ls = spectrum.lengths
    L = spectrum.cutoff
    if len(ls) < 4:
        raise InsufficientCutoffError("spectrum too short to contain the once-around ortho")
    t = float(ls[0])
    bsum = _pairwise_sum(basmajian_term(ls))
    vals = [t]
    for x in ls:
        if x - vals[-1] > tol:
            vals.append(float(x))
    tried = []
    for y in vals[1:]:
        if len(tried) >= max_candidates:
            break
        # P(a, a, g) carries 4 oriented entries at the once-around length
        if np.sum(np.abs(ls - y) <= tol) < 4:
            continue
        pg = pants_from_simple_pair(t, float(y))
        if pg is None:
            continue
        la, lg = pg
        if lg < bsum - 1e-9:
            tried.append((float(y), "basmajian lower bound"))
            continue
        P = build_pants(la, la, lg)
        pspec = ortho_spectrum(P, L, pairs=[(2, 2)], keep_reps=False).lengths
        rest = _submultiset(pspec, ls, tol)
        if rest is None:
            tried.append((float(y), "pants spectrum not contained"))
            continue
        rest = rest[rest <= L - tol]
        if len(rest) == 0:
            raise InsufficientCutoffError("no ortho crossing alpha below the cutoff")
        c = float(rest[0])
        tw, res = crossing_twist(c, la, lg)
        if tw > la / 2 + 1e-9:
            tried.append((float(y), "crossing ortho too long for any twist"))
            continue
        details = {"t": t, "once_around": float(y), "crossing": c, "basmajian_partial": bsum,
                   "twist_resolution": res, "candidates_rejected": tried}
        if verify:
            T = build_one_holed_torus(la, tw, lg)
            cmp = compare_spectra(spectrum, ortho_spectrum(T, L, keep_reps=False), 1e-6)
            details["verification"] = cmp.to_json_obj()
            if not cmp.isospectral:
                tried.append((float(y), "rebuilt torus spectrum differs"))
                continue
        return TorusParams(lg, la, tw, details)
    raise ReconstructionError(f"no consistent one-holed torus; rejected candidates: {tried[:8]}")


# ---------------------------------------------------------------- McKean bound


def default_pants_cap(chi: int, boundary_lengths) -> float:
    """Coarse upper bound for a short pants decomposition: 4 pi |chi| plus
    the longest boundary, in the style of Buser's partition bounds."""
    return 4 * math.pi * abs(chi) + max(boundary_lengths, default=0.0)


def mckean_systole_bound(spectrum: OrthoSpectrum, topology=None, pants_length_cap: float | None = None,
                         return_details: bool = False):
    """Lower bound for the systole of any structure with this ortho spectrum.

    Induction over a rooted chain of pants (depth <= number of pants): in
    the pants at depth n, two orthos tau_n < tau_n' with both feet on the
    root boundary satisfy 2 cosh(l(alpha_{n+1})/2) = cosh(tau_n'/2) /
    cosh(tau_n/2) > 2, and both lie below a window W_n built from cord
    bounds and boundary distances.  The least ratio above 2 among spectrum
    values below W_n bounds l(alpha_{n+1}).  Curves outside the
    decomposition cross a pants curve of length <= cap and are longer than
    its collar.  If a window exceeds the cutoff the bound drops to 0 and is
    flagged.
    """
    bl = list(spectrum.boundary_lengths)
    chi = spectrum.euler_characteristic
    if topology is not None:
        g, nb = topology
        chi = 2 - 2 * g - nb
    if chi is None or not bl:
        raise InsufficientDataError("topology and boundary lengths are required")
    npants = abs(chi)
    B = pants_length_cap if pants_length_cap is not None else default_pants_cap(chi, bl)
    S = spectrum.lengths
    L = spectrum.cutoff
    details = {"pants_cap": B, "pants": npants, "roots": []}
    if npants <= 1 and len(bl) == 3:
        out = min(bl)
        details["bound"] = out
        return (out, details) if return_details else out
    collar = 2 * math.asinh(1 / math.sinh(B / 2))
    best = math.inf
    flagged = False
    for l0 in sorted(set(bl)):
        lam = [l0]
        steps = []
        A = 0.0
        ok = True
        for n in range(npants):
            T = 2 * math.asinh(math.cosh(B / 2) / math.sinh(min(lam[-1], B) / 4))
            if n == 0:
                W = l0 + 2 * T
            else:
                A += pants_boundary_distance(lam[n - 1], lam[n], B) + B / 2
                W = 2 * A + 2 * T + 2 * B
            if W > L:
                steps.append({"depth": n, "window": W, "status": "window beyond cutoff"})
                ok = False
                break
            r = min_ratio_above(S, W, 2.0)
            if not math.isfinite(r):
                steps.append({"depth": n, "window": W, "status": "no pair with ratio above 2"})
                ok = False
                break
            lam.append(2 * math.acosh(r / 2))
            steps.append({"depth": n, "window": W, "ratio": r, "lower_bound": lam[-1]})
        root = min(lam + [collar] + bl) if ok else 0.0
        flagged |= not ok
        details["roots"].append({"root_length": l0, "steps": steps, "bound": root})
        best = min(best, root)
    details["collar"] = collar
    details["flagged"] = flagged
    details["bound"] = best
    return (best, details) if return_details else best


# ---------------------------------------------------------------- pinching


def pinching_experiment(eps=(0.4, 0.2, 0.1), l_gamma: float = 2.0, n_max: int = 5):
    """Orthos winding around a pinched curve on build_one_holed_torus(e, 0, l_gamma).

    For each e the crossing orthos (input spectrum minus the gamma-gamma
    spectrum of the cut-open pants) are sorted; the n-th distinct value
    d_n is compared with n e - 2 ln e, and M is the least constant with
    d_n <= n e - 2 ln e + M for all e and n <= n_max.
    """
    rows = []
    for e in eps:
        h = pants_boundary_distance(e, l_gamma, e)
        dmax = math.acosh(math.cosh(h) ** 2 + math.sinh(h) ** 2 * math.cosh((n_max - 1) * e))
        L = dmax + 0.25
        T = build_one_holed_torus(e, 0.0, l_gamma)
        spec = ortho_spectrum(T, L, keep_reps=False).lengths
        P = build_pants(e, e, l_gamma)
        pspec = ortho_spectrum(P, L, pairs=[(2, 2)], keep_reps=False).lengths
        rest = _submultiset(pspec, spec, MATCH_TOL)
        if rest is None:
            raise ReconstructionError("pants spectrum not contained in the torus spectrum")
        d = []
        for x in np.sort(rest):
            if not d or x - d[-1] > MATCH_TOL:
                d.append(float(x))
        if len(d) < n_max:
            raise InsufficientCutoffError(f"only {len(d)} crossing lengths below {L}")
        d = d[:n_max]
        Ms = [d[n - 1] - n * e + 2 * math.log(e) for n in range(1, n_max + 1)]
        rows.append({"eps": e, "cutoff": L, "crossing": d, "M": max(Ms)})
    return {"rows": rows, "M": max(r["M"] for r in rows), "n_max": n_max, "l_gamma": l_gamma}
