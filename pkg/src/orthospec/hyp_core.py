"""Upper half-plane hyperbolic geometry: isometries, geodesics, cross-ratios
and the trigonometric relations used for pants and one-holed tori.

All lengths are in hyperbolic units (curvature -1).  The ideal point at
infinity is the IEEE value ``INF`` (``math.inf``) and is handled by explicit
branches, never approximated by a large number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

INF = math.inf

DET_TOL = 1e-12
IDENTITY_TOL = 1e-12


class GeometryError(ValueError):
    """Raised when an input lies outside the domain of a geometric formula."""


class AsymptoticGeodesicsError(GeometryError):
    """Two geodesics share an ideal endpoint, so no common perpendicular exists."""


class IntersectingGeodesicsError(GeometryError):
    """Two geodesics cross, so no common perpendicular exists."""


class DegeneratePentagonError(GeometryError):
    """sinh(a) sinh(b) <= 1: no right-angled pentagon has these adjacent sides."""


class IsometryClass(str, Enum):
    IDENTITY = "identity"
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"


def _sign_normalize(m: np.ndarray) -> np.ndarray:
    # trace >= 0; ties broken by the first nonzero entry being >= 0
    tr = m[0, 0] + m[1, 1]
    if tr < 0:
        return -m
    if tr == 0:
        for v in m.ravel():
            if v != 0:
                return -m if v < 0 else m
    return m


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry of the upper half-plane, a matrix in
    SL(2, R) taken up to sign.

    The stored entries are sign-normalized (trace >= 0, ties broken by the
    first nonzero entry) so equal isometries compare and hash equal once
    their entries agree exactly.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        scale = max(1.0, abs(self.a), abs(self.b), abs(self.c), abs(self.d)) ** 2
        if abs(det - 1.0) > 1e-9 * scale:
            raise GeometryError(f"determinant {det!r} is not 1")

    @classmethod
    def from_matrix(cls, m, renormalize: bool = True) -> "Isometry":
        m = np.asarray(m, dtype=float)
        if renormalize:
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if det <= 0:
                raise GeometryError("matrix does not preserve orientation")
            m = m / math.sqrt(det)
        m = _sign_normalize(m)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry.from_matrix([[self.d, -self.b], [-self.c, self.a]])

    def __call__(self, z):
        return mobius(self.matrix, z)

    def conjugate(self, s: "Isometry") -> "Isometry":
        """Return s * self * s^-1."""
        return s @ self @ s.inverse()

    def close_to(self, other: "Isometry", tol: float = 1e-9) -> bool:
        m, n = self.matrix, other.matrix
        return bool(np.max(np.abs(m - n)) <= tol or np.max(np.abs(m + n)) <= tol)


def mobius(m: np.ndarray, z):
    """Apply the Mobius map of a 2x2 matrix to a point of the closed half-plane.

    Real points and ``INF`` are ideal points; complex values with positive
    imaginary part are interior points.
    """
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if isinstance(z, float) and math.isinf(z):
        return a / c if c != 0 else INF
    den = c * z + d
    if den == 0:
        return INF
    return (a * z + b) / den


@dataclass(frozen=True)
class Geodesic:
    """Complete geodesic given by its two ideal endpoints (unordered)."""

    p: float
    q: float

    def __post_init__(self):
        if self.p == self.q:
            raise GeometryError("geodesic endpoints must be distinct")
        if math.isnan(self.p) or math.isnan(self.q):
            raise GeometryError("NaN endpoint")

    def _key(self):
        return tuple(sorted((self.p, self.q)))

    def __eq__(self, other):
        if not isinstance(other, Geodesic):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def endpoints(self) -> tuple[float, float]:
        return self._key()

    def image(self, t: Isometry) -> "Geodesic":
        return Geodesic(float(t(self.p)), float(t(self.q)))

    def close_to(self, other: "Geodesic", tol: float = 1e-10) -> bool:
        def near(x, y):
            if math.isinf(x) or math.isinf(y):
                return math.isinf(x) and math.isinf(y)
            return abs(x - y) <= tol * max(1.0, abs(x), abs(y))

        (a, b), (c, d) = self.endpoints, other.endpoints
        return near(a, c) and near(b, d)

    def euclidean_center_radius(self) -> tuple[float, float]:
        """Center and radius of the half-circle (finite endpoints only)."""
        if math.isinf(self.p) or math.isinf(self.q):
            raise GeometryError("vertical geodesic has no Euclidean center")
        lo, hi = self.endpoints
        return (lo + hi) / 2, (hi - lo) / 2


@dataclass(frozen=True)
class IdealQuadruple:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        pts = [self.a, self.b, self.c, self.d]
        for i in range(4):
            for j in range(i + 1, 4):
                if pts[i] == pts[j]:
                    raise GeometryError("ideal points of a quadruple must be distinct")


def _check_hyperbolic(t: Isometry):
    if classify(t) is not IsometryClass.HYPERBOLIC:
        raise GeometryError(f"isometry is {classify(t).value}, not hyperbolic")


def classify(t: Isometry) -> IsometryClass:
    m = t.matrix
    if (np.max(np.abs(m - np.eye(2))) <= IDENTITY_TOL
            or np.max(np.abs(m + np.eye(2))) <= IDENTITY_TOL):
        return IsometryClass.IDENTITY
    tr = abs(t.trace)
    if abs(tr - 2.0) <= IDENTITY_TOL:
        return IsometryClass.PARABOLIC
    return IsometryClass.HYPERBOLIC if tr > 2.0 else IsometryClass.ELLIPTIC


def translation_length(t: Isometry) -> float:
    _check_hyperbolic(t)
    return 2.0 * math.acosh(abs(t.trace) / 2.0)


def fixed_points(m: np.ndarray) -> tuple[float, float]:
    """Repelling and attracting fixed points of a hyperbolic matrix."""
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    tr = a + d
    disc = math.sqrt(max(tr * tr - 4.0, 0.0))
    lam = (tr + disc) / 2  # eigenvalue > 1
    if c == 0:
        # fixes infinity; other fixed point b / (d - a)
        other = float(b / (d - a))
        return (other, INF) if a > d else (INF, other)
    # eigenvector for eigenvalue mu: z = (mu - d) / c = b / (mu - a); take
    # the form whose subtraction does not cancel
    def fp(mu):
        if abs(mu - d) >= abs(mu - a):
            return float((mu - d) / c)
        return float(b / (mu - a)) if mu != a else INF

    return fp(1.0 / lam), fp(lam)


def axis(t: Isometry) -> Geodesic:
    _check_hyperbolic(t)
    r, s = fixed_points(t.matrix)
    return Geodesic(r, s)


def cross_ratio(q: IdealQuadruple) -> float:
    """cr(a,b;c,d) = (a-c)(b-d) / ((a-d)(b-c)), with limits at infinity."""
    a, b, c, d = q.a, q.b, q.c, q.d
    num = [a - c, b - d]
    den = [a - d, b - c]
    # drop factors containing infinity in pairs (each infinite entry appears
    # once in the numerator and once in the denominator)
    if math.isinf(a):
        num[0] = den[0] = 1.0
    if math.isinf(b):
        num[1] = den[1] = 1.0
    if math.isinf(c):
        num[0] = 1.0
        den[1] = 1.0
    if math.isinf(d):
        num[1] = 1.0
        den[0] = 1.0
    return (num[0] * num[1]) / (den[0] * den[1])


def _one_minus_cr(a, b, c, d) -> float:
    # 1 - cr = (a-b)(d-c) / ((a-d)(b-c)); exact cancellation-free form
    num = [a - b, d - c]
    den = [a - d, b - c]
    # (a-b)/(b-c) and (d-c)/(a-d) tend to -1 as b or d goes to infinity
    if math.isinf(a):
        num[0] = den[0] = 1.0
    if math.isinf(b):
        num[0] = -1.0
        den[1] = 1.0
    if math.isinf(c):
        num[1] = 1.0
        den[1] = 1.0
    if math.isinf(d):
        num[1] = -1.0
        den[0] = 1.0
    return (num[0] * num[1]) / (den[0] * den[1])


def geodesic_distance(g1: Geodesic, g2: Geodesic) -> float:
    """Length of the common perpendicular between two disjoint geodesics.

    With cr = cr(p1, q1; p2, q2) the perpendicular length d satisfies
    tanh^2(d/2) = min(cr, 1/cr); equivalently cosh d = (1 + cr)/(1 - cr).
    """
    a, b = g1.p, g1.q
    c, d = g2.p, g2.q
    if {a, b} & {c, d}:
        raise AsymptoticGeodesicsError("geodesics share an ideal endpoint")
    cr = cross_ratio(IdealQuadruple(a, b, c, d))
    if cr < 0:
        raise IntersectingGeodesicsError("geodesics cross")
    if cr > 1:
        # swapping c and d inverts the cross-ratio
        c, d = d, c
        cr = 1.0 / cr
    omc = _one_minus_cr(a, b, c, d)
    # cosh dist = (1 + cr) / (1 - cr) = 2 / omc - 1
    return math.acosh(max(2.0 / omc - 1.0, 1.0))


def normalizing_map(g: Geodesic, base_point: complex | None = None) -> Isometry:
    """Isometry sending g to the imaginary axis (p -> 0, q -> INF).

    If ``base_point`` is given, the map also sends the foot of the
    perpendicular from base_point onto g to the point i.
    """
    p, q = g.p, g.q
    if math.isinf(q):
        m = np.array([[1.0, -p], [0.0, 1.0]])
    elif math.isinf(p):
        m = np.array([[0.0, -1.0], [1.0, -q]])
    else:
        # z -> (z - p) / (z - q), orientation fixed by the sign of q - p
        m = np.array([[1.0, -p], [1.0, -q]])
        if q - p < 0:
            m = np.array([[-1.0, p], [1.0, -q]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    m = m / math.sqrt(det)
    if base_point is not None:
        w = mobius(m, complex(base_point))
        s = abs(w)  # foot of the perpendicular from w to the imaginary axis
        m = np.diag([1 / math.sqrt(s), math.sqrt(s)]) @ m
    return Isometry.from_matrix(m)


def point_distance(z: complex, w: complex) -> float:
    z, w = complex(z), complex(w)
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


def point_to_geodesic_distance(z: complex, g: Geodesic) -> float:
    w = complex(normalizing_map(g)(complex(z)))
    # distance from w to the imaginary axis: sinh d = |Re w| / Im w
    return math.asinh(abs(w.real) / w.imag)


def pentagon_side(a: float, b: float) -> float:
    """Side opposite two adjacent sides a, b of a right-angled pentagon:
    cosh d = sinh a sinh b."""
    v = math.sinh(a) * math.sinh(b)
    if not v > 1.0:
        raise DegeneratePentagonError(f"sinh(a) sinh(b) = {v} <= 1")
    return math.acosh(v)


def tau_prime_from_tau(a: float, t: float) -> float:
    """Length of the ortho geodesic winding once around a cuff of length a,
    given the simple ortho length t on the third cuff:
    cosh(t'/2) = 2 cosh(a/2) cosh(t/2)."""
    if a <= 0 or t <= 0:
        raise GeometryError("lengths must be positive")
    return 2.0 * math.acosh(2.0 * math.cosh(a / 2) * math.cosh(t / 2))


def cord_upper_bound(l_alpha: float, l_gamma: float) -> float:
    """Upper bound 2 arcsinh(cosh(l_alpha/2) / sinh(l_gamma/4)) for the simple
    ortho geodesic with both feet on the cuff of length l_gamma."""
    if l_alpha <= 0 or l_gamma <= 0:
        raise GeometryError("lengths must be positive")
    return 2.0 * math.asinh(math.cosh(l_alpha / 2) / math.sinh(l_gamma / 4))


def pants_boundary_distance(l1: float, l2: float, l3: float) -> float:
    """Distance between cuffs 1 and 2 of the pants with cuff lengths l1, l2, l3.

    Right-angled hexagon with alternate sides l1/2, l2/2, l3/2:
    cosh d12 = (cosh(l3/2) + cosh(l1/2) cosh(l2/2)) / (sinh(l1/2) sinh(l2/2)).
    """
    if min(l1, l2, l3) <= 0:
        raise GeometryError("lengths must be positive")
    h1, h2, h3 = l1 / 2, l2 / 2, l3 / 2
    num = math.cosh(h3) + math.cosh(h1) * math.cosh(h2)
    return math.acosh(num / (math.sinh(h1) * math.sinh(h2)))


def twist_along(t: Isometry, s: float) -> Isometry:
    """Translation by signed distance s along the axis of t (positive s moves
    in the direction t translates).

    Uses t^x = (sinh(x u) t - sinh((x - 1) u) I) / sinh u with cosh u = tr/2,
    which follows from t^2 = tr(t) t - I.
    """
    _check_hyperbolic(t)
    m = t.matrix
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    u = math.acosh((m[0, 0] + m[1, 1]) / 2)
    x = s / (2 * u)
    out = (math.sinh(x * u) * m - math.sinh((x - 1) * u) * np.eye(2)) / math.sinh(u)
    return Isometry.from_matrix(out)


def line_matrix(g: Geodesic) -> np.ndarray:
    """Traceless matrix M with M^2 = I whose fixed points are the endpoints of g.

    Orientation runs from ``g.p`` to ``g.q``.  For two such matrices of
    disjoint geodesics, |tr(M1 M2)| / 2 = cosh of their distance.
    """
    p, q = g.p, g.q
    if math.isinf(q):
        return np.array([[1.0, -2.0 * p], [0.0, -1.0]])
    if math.isinf(p):
        return np.array([[-1.0, 2.0 * q], [0.0, 1.0]])
    # geodesic (x, y): M = [[x + y, -2xy], [2, -(x + y)]] / (y - x)
    return np.array([[p + q, -2.0 * p * q], [2.0, -(p + q)]]) / (q - p)


def axis_line_matrix(m: np.ndarray) -> np.ndarray:
    """Line matrix of the axis of a hyperbolic matrix, oriented along its
    translation direction: (m - m^-1) / (2 sinh(l/2))."""
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    minv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    tr = m[0, 0] + m[1, 1]
    return (m - minv) / math.sqrt(tr * tr - 4.0)
