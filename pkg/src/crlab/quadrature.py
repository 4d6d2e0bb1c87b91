"""Exact polynomial integration on triangles and edges.

``Poly2`` holds a bivariate polynomial of total degree at most
``MAX_DEGREE`` as a dense coefficient table.  Triangle integrals use a
collapsed Gauss-Legendre product rule, edge integrals a 1-D Gauss rule;
both are exact for every polynomial the library builds.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

MAX_DEGREE = 6


class DegreeError(ValueError):
    pass


class Poly2:
    """Polynomial sum c[i, j] x**i y**j with i + j <= MAX_DEGREE."""

    __slots__ = ("coef",)

    def __init__(self, coef=None):
        c = np.zeros((MAX_DEGREE + 1, MAX_DEGREE + 1))
        if coef is not None:
            coef = np.asarray(coef, dtype=float)
            if coef.ndim != 2:
                raise ValueError("coefficient table must be 2-D")
            for (i, j), v in np.ndenumerate(coef):
                if v != 0.0:
                    if i + j > MAX_DEGREE:
                        raise DegreeError(f"monomial x^{i} y^{j} exceeds degree {MAX_DEGREE}")
                    c[i, j] = v
        self.coef = c

    @classmethod
    def from_terms(cls, terms: dict) -> "Poly2":
        p = cls()
        for (i, j), v in terms.items():
            if i + j > MAX_DEGREE:
                raise DegreeError(f"monomial x^{i} y^{j} exceeds degree {MAX_DEGREE}")
            p.coef[i, j] += v
        return p

    @classmethod
    def constant(cls, value: float) -> "Poly2":
        return cls.from_terms({(0, 0): value})

    @classmethod
    def x(cls) -> "Poly2":
        return cls.from_terms({(1, 0): 1.0})

    @classmethod
    def y(cls) -> "Poly2":
        return cls.from_terms({(0, 1): 1.0})

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        i, j = np.nonzero(self.coef)
        return int((i + j).max()) if len(i) else -1

    def is_zero(self) -> bool:
        return not np.any(self.coef)

    def _coerce(self, other):
        if isinstance(other, Poly2):
            return other
        if np.isscalar(other):
            return Poly2.constant(float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = Poly2()
        out.coef = self.coef + other.coef
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Poly2()
        out.coef = -self.coef
        return out

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            out = Poly2()
            out.coef = self.coef * float(other)
            return out
        if not isinstance(other, Poly2):
            return NotImplemented
        if self.degree + other.degree > MAX_DEGREE:
            raise DegreeError(f"product degree {self.degree + other.degree} exceeds {MAX_DEGREE}")
        out = Poly2()
        for (i, j) in zip(*np.nonzero(self.coef)):
            a = self.coef[i, j]
            for (p, q) in zip(*np.nonzero(other.coef)):
                out.coef[i + p, j + q] += a * other.coef[p, q]
        return out

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly2.constant(1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return bool(np.array_equal(self.coef, other.coef))

    def __repr__(self):
        terms = [f"{self.coef[i, j]:+g}*x^{i}y^{j}" for i, j in zip(*np.nonzero(self.coef))]
        return "Poly2(" + (" ".join(terms) if terms else "0") + ")"

    def dx(self) -> "Poly2":
        out = Poly2()
        i = np.arange(1, MAX_DEGREE + 1)[:, None]
        out.coef[:-1, :] = self.coef[1:, :] * i
        return out

    def dy(self) -> "Poly2":
        out = Poly2()
        j = np.arange(1, MAX_DEGREE + 1)[None, :]
        out.coef[:, :-1] = self.coef[:, 1:] * j
        return out

    def laplacian(self) -> "Poly2":
        return self.dx().dx() + self.dy().dy()

    def restrict_x(self, x0: float) -> np.ndarray:
        """Coefficients in y of p(x0, y)."""
        return (x0 ** np.arange(MAX_DEGREE + 1)) @ self.coef

    def restrict_y(self, y0: float) -> np.ndarray:
        """Coefficients in x of p(x, y0)."""
        return self.coef @ (y0 ** np.arange(MAX_DEGREE + 1))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = max(self.degree, 0)
        # Horner in x over polynomials in y
        out = np.zeros(np.broadcast(x, y).shape)
        for i in range(d, -1, -1):
            row = np.zeros_like(out)
            for j in range(d - i, -1, -1):
                row = row * y + self.coef[i, j]
            out = out * x + row
        return out


@dataclass(frozen=True)
class QuadRule:
    """Rule on the reference triangle; weights sum to one (area fractions)."""

    bary: np.ndarray
    weights: np.ndarray
    degree: int

    def points(self, coords: np.ndarray) -> np.ndarray:
        """Map to physical points; coords (..., 3, 2) -> (..., Q, 2)."""
        return np.einsum("qk,...kd->...qd", self.bary, coords)


def triangle_rule(degree: int = MAX_DEGREE) -> QuadRule:
    """Collapsed (Duffy) Gauss-Legendre rule exact to the given degree."""
    npts = degree // 2 + 1
    g, w = np.polynomial.legendre.leggauss(npts)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    x = (u * (1.0 - v)).ravel()
    y = v.ravel()
    weights = (2.0 * wu * wv * (1.0 - v)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return QuadRule(bary=bary, weights=weights, degree=degree)


def edge_rule(npts: int = 3):
    """Gauss-Legendre nodes on [0, 1] and weights summing to one."""
    g, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (g + 1.0), 0.5 * w


DEFAULT_RULE = triangle_rule(MAX_DEGREE)
EDGE_NODES, EDGE_WEIGHTS = edge_rule(3)


def _signed_area(v) -> float:
    return 0.5 * ((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[1, 1] - v[0, 1]) * (v[2, 0] - v[0, 0]))


def integrate_triangle(p: Poly2, triangle, rule: QuadRule = DEFAULT_RULE) -> float:
    if p.degree > rule.degree:
        raise DegreeError(f"degree {p.degree} exceeds rule exactness {rule.degree}")
    v = np.asarray(triangle, dtype=float)
    pts = rule.points(v)
    return abs(_signed_area(v)) * float(rule.weights @ p(pts[:, 0], pts[:, 1]))


def integrate_edge(p: Poly2, edge) -> float:
    if p.degree > 2 * len(EDGE_NODES) - 1:
        raise DegreeError(f"degree {p.degree} exceeds edge rule exactness")
    a, b = (np.asarray(q, dtype=float) for q in edge)
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        raise ValueError("degenerate edge")
    pts = a + EDGE_NODES[:, None] * (b - a)
    return length * float(EDGE_WEIGHTS @ p(pts[:, 0], pts[:, 1]))


def _sign(sign) -> int:
    if sign in (1, "+"):
        return 1
    if sign in (-1, "-"):
        return -1
    raise ValueError(f"sign must be +1/-1 or '+'/'-', got {sign!r}")


def closed_form_interior(alpha: int, beta: int, sign, h: float, k: float) -> float:
    """Integral of t^alpha s^beta over the isosceles triangle with base
    [-h, h] x {0} and apex (0, +-k)."""
    if alpha < 0 or beta < 0:
        raise ValueError("exponents must be non-negative")
    if alpha % 2:
        return 0.0
    c = 2 * factorial(alpha) * factorial(beta) / factorial(alpha + beta + 2)
    return _sign(sign) ** beta * c * h ** (alpha + 1) * k ** (beta + 1)


def closed_form_boundary(alpha: int, beta: int, sign, h: float, k: float) -> float:
    """Same monomial over the right triangle (0,0), (h,0), (0,+-k)."""
    if alpha < 0 or beta < 0:
        raise ValueError("exponents must be non-negative")
    c = factorial(alpha) * factorial(beta) / factorial(alpha + beta + 2)
    return _sign(sign) ** beta * c * h ** (alpha + 1) * k ** (beta + 1)
