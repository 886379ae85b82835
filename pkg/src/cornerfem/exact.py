"""Manufactured solutions u, grad u and f = -Laplace(u).

All evaluators take points ``x`` of shape (n, d) and an optional ``hint`` of
the same shape: a point inside an adjacent cell, used to choose the bank of
the angular branch cut for points lying exactly on it.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

INF = math.inf


class SingularPointError(ValueError):
    """A singular quantity was requested exactly at the singular point."""


class Evaluation(NamedTuple):
    u: np.ndarray
    grad: np.ndarray
    f: np.ndarray


class ExactSolution:
    dim: int = 2
    # point where f (and possibly grad u) blows up, with its exponent
    singular_point: np.ndarray | None = None

    @property
    def singular_exponent(self) -> float | None:
        return None

    def u(self, x, hint=None) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x, hint=None) -> np.ndarray:
        raise NotImplementedError

    def f(self, x, hint=None) -> np.ndarray:
        raise NotImplementedError

    def eval(self, x, hint=None) -> Evaluation:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return Evaluation(self.u(x, hint), self.grad(x, hint), self.f(x, hint))

    @property
    def key(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class CornerSingular2D(ExactSolution):
    """u = r**alpha * sin(a * phi) around ``x0``.

    phi is measured counter-clockwise from the positive x-axis in [0, 2*pi).
    Points on the ray {y = y0, x > x0} take phi = 2*pi when their hint lies
    below the ray (lower slit bank), phi = 0 otherwise.
    """

    alpha: float
    a: float
    x0: tuple = (0.0, 0.0)
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def singular_point(self) -> np.ndarray:
        return np.asarray(self.x0, dtype=float)

    @property
    def singular_exponent(self) -> float:
        return self.alpha

    def polar(self, x, hint=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dx = x[:, 0] - self.x0[0]
        dy = x[:, 1] - self.x0[1]
        r = np.hypot(dx, dy)
        phi = np.mod(np.arctan2(dy, dx), 2 * math.pi)
        on_ray = (dy == 0) & (dx > 0)
        if hint is not None and on_ray.any():
            hint = np.atleast_2d(np.asarray(hint, dtype=float))
            below = hint[:, 1] < self.x0[1]
            phi = np.where(on_ray & below, 2 * math.pi, np.where(on_ray, 0.0, phi))
        return r, phi

    def u(self, x, hint=None):
        r, phi = self.polar(x, hint)
        return r**self.alpha * np.sin(self.a * phi)

    def grad(self, x, hint=None):
        r, phi = self.polar(x, hint)
        if self.alpha < 1 and np.any(r == 0):
            raise SingularPointError("gradient requested at the singular point")
        c, s = np.cos(phi), np.sin(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = np.where(r > 0, r ** (self.alpha - 1), 0.0)
        radial = self.alpha * np.sin(self.a * phi)
        angular = self.a * np.cos(self.a * phi)
        gx = rp * (radial * c - angular * s)
        gy = rp * (radial * s + angular * c)
        return np.stack([gx, gy], axis=1)

    def f(self, x, hint=None):
        r, phi = self.polar(x, hint)
        coef = self.a**2 - self.alpha**2
        if coef == 0:
            return np.zeros_like(r)
        if self.alpha < 2 and np.any(r == 0):
            raise SingularPointError("right-hand side requested at the singular point")
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = np.where(r > 0, r ** (self.alpha - 2), 0.0)
        return coef * rp * np.sin(self.a * phi)

    @property
    def key(self) -> str:
        return f"corner{{alpha={self.alpha!r},a={self.a!r},x0={self.x0[0]!r},{self.x0[1]!r}}}"


@dataclass(frozen=True)
class SmoothFichera3D(ExactSolution):
    """u = sin((x + y) pi) cos(2 pi z), f = 6 pi^2 u."""

    dim: int = field(default=3, init=False)

    def u(self, x, hint=None):
        x = np.atleast_2d(x)
        return np.sin((x[:, 0] + x[:, 1]) * math.pi) * np.cos(2 * math.pi * x[:, 2])

    def grad(self, x, hint=None):
        x = np.atleast_2d(x)
        s = (x[:, 0] + x[:, 1]) * math.pi
        z = 2 * math.pi * x[:, 2]
        gxy = math.pi * np.cos(s) * np.cos(z)
        return np.stack([gxy, gxy, -2 * math.pi * np.sin(s) * np.sin(z)], axis=1)

    def f(self, x, hint=None):
        return 6 * math.pi**2 * self.u(x)

    @property
    def key(self) -> str:
        return "fichera"


_VARS = "xyz"


@dataclass(frozen=True)
class Polynomial(ExactSolution):
    """Sum of monomials; ``terms`` maps exponent tuples to coefficients."""

    terms: tuple  # ((exponents, coefficient), ...)
    dim: int = 2

    @classmethod
    def from_dict(cls, terms: dict, dim: int = 2) -> "Polynomial":
        items = [(tuple(int(e) for e in k), float(v)) for k, v in terms.items()]
        # graded order, x before y before z within a degree
        items = tuple(sorted(items, key=lambda t: (sum(t[0]), [-e for e in t[0]])))
        if any(len(k) != dim for k, _ in items):
            raise ValueError("exponent tuples must match the dimension")
        return cls(items, dim)

    @property
    def degree(self) -> int:
        return max((sum(k) for k, _ in self.terms), default=0)

    def _mono(self, x, exps):
        out = np.ones(len(x))
        for i, e in enumerate(exps):
            if e:
                out = out * x[:, i] ** e
        return out

    def u(self, x, hint=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return sum((c * self._mono(x, e) for e, c in self.terms), np.zeros(len(x)))

    def grad(self, x, hint=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.zeros((len(x), self.dim))
        for e, c in self.terms:
            for i in range(self.dim):
                if e[i]:
                    d = list(e)
                    d[i] -= 1
                    g[:, i] += c * e[i] * self._mono(x, d)
        return g

    def f(self, x, hint=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        for e, c in self.terms:
            for i in range(self.dim):
                if e[i] >= 2:
                    d = list(e)
                    d[i] -= 2
                    out -= c * e[i] * (e[i] - 1) * self._mono(x, d)
        return out

    @property
    def key(self) -> str:
        parts = []
        for e, c in self.terms:
            mono = "".join(
                _VARS[i] + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p
            ) or "1"
            parts.append(f"{mono}={c!r}")
        return f"poly{self.dim}d{{{','.join(parts)}}}"


@dataclass(frozen=True)
class Regularity:
    """Global Besov index s and local indices s_j at the domain's reentrant corners."""

    s: float
    corners: tuple
    integer_exponent: bool = False


def besov_regularity(solution: ExactSolution, corners=()) -> Regularity:
    """Regularity indices of ``solution`` (infinite entries mean analytic).

    ``corners`` is a sequence of objects with a ``point`` attribute (or points).
    For r**alpha sin(a phi), s = 1 + alpha globally and at a corner that
    coincides with the singular point; any other corner sees a smooth function.
    """
    pts = [np.asarray(getattr(c, "point", c), dtype=float) for c in corners]
    if not isinstance(solution, CornerSingular2D):
        return Regularity(INF, tuple(INF for _ in pts))
    s = 1.0 + solution.alpha
    local = tuple(s if np.allclose(p, solution.x0, atol=1e-12) else INF for p in pts)
    return Regularity(s, local, float(solution.alpha).is_integer())


# -- string keys -----------------------------------------------------------------

_KEY = re.compile(r"^\s*(\w+)\s*(?:\{(.*)\})?\s*$")
_MONO = re.compile(r"([xyz])(?:\^(\d+))?")

PRESETS = {
    "linear2d": "poly2d{1=0.25,x=1.0,y=-0.5}",
    "linear3d": "poly3d{1=0.25,x=1.0,y=-0.5,z=0.75}",
    "smooth2d": "poly2d{x^4=1.0,x^2y^2=-2.0,y^3=0.5,xy=1.0}",
}


def _num(text: str) -> float:
    """Parse a number or a product/quotient of numbers and ``pi`` (e.g. ``2/3*pi``)."""
    tokens = re.split(r"([*/])", text.replace(" ", ""))
    value = 1.0
    op = "*"
    for tok in tokens:
        if tok in "*/" and tok:
            op = tok
            continue
        v = math.pi if tok == "pi" else float(tok)
        value = value * v if op == "*" else value / v
    return value


def parse_solution(key: str) -> ExactSolution:
    """Build a solution from a study-config key.

    Examples: ``corner{alpha=0.75,a=1/2,x0=0,0}``, ``fichera``,
    ``poly2d{1=0.25,x=1,y=-0.5}`` or a preset name such as ``linear2d``.
    """
    key = PRESETS.get(key.strip(), key)
    m = _KEY.match(key)
    if not m:
        raise ValueError(f"malformed solution key {key!r}")
    name, body = m.group(1), m.group(2) or ""
    if name == "fichera":
        return SmoothFichera3D()
    if name == "corner":
        params = {}
        for part in re.split(r",(?=\s*[a-zA-Z]\w*\s*=)", body):
            k, _, v = part.partition("=")
            params[k.strip()] = v.strip()
        x0 = tuple(_num(t) for t in params.get("x0", "0,0").split(","))
        return CornerSingular2D(_num(params["alpha"]), _num(params["a"]), x0)
    if name in ("poly2d", "poly3d"):
        dim = int(name[4])
        terms = {}
        for part in filter(None, (p.strip() for p in body.split(","))):
            mono, _, coef = part.partition("=")
            exps = [0] * dim
            if mono.strip() != "1":
                for var, power in _MONO.findall(mono):
                    exps[_VARS.index(var)] += int(power or 1)
            terms[tuple(exps)] = terms.get(tuple(exps), 0.0) + _num(coef)
        return Polynomial.from_dict(terms, dim)
    raise ValueError(f"unknown solution kind {name!r}")
