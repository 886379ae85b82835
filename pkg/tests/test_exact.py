import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cornerfem.exact import (
    CornerSingular2D,
    Polynomial,
    SingularPointError,
    SmoothFichera3D,
    besov_regularity,
    parse_solution,
)
from cornerfem.mesh import domain


def fd_grad(sol, x, step=1e-6, hint=None):
    d = len(x)
    g = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        g[i] = (sol.u(x + e, hint)[0] - sol.u(x - e, hint)[0]) / (2 * step)
    return g


def fd_laplacian(sol, x, step=1e-4):
    d = len(x)
    out = 0.0
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        out += (sol.u(x + e)[0] - 2 * sol.u(x)[0] + sol.u(x - e)[0]) / step**2
    return -out


SOLUTIONS = [
    CornerSingular2D(0.75, 0.5),
    CornerSingular2D(2.375, 2 / 3),
    CornerSingular2D(0.75, 1.0, (0.5, 0.0)),
    SmoothFichera3D(),
    parse_solution("smooth2d"),
]


@pytest.mark.parametrize("sol", SOLUTIONS, ids=lambda s: s.key)
@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=3, max_size=3))
def test_gradient_matches_finite_differences(sol, coords):
    x = np.array(coords[: sol.dim])
    if sol.singular_point is not None:
        r = np.linalg.norm(x - sol.singular_point)
        if r < 1e-2 or abs(x[1] - sol.singular_point[1]) < 1e-5:
            return  # too close to the point or the branch cut
    g = sol.grad(x[None])[0]
    np.testing.assert_allclose(g, fd_grad(sol, x), rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("sol", SOLUTIONS, ids=lambda s: s.key)
def test_rhs_is_minus_laplacian(sol):
    x = np.array([-0.4, 0.55, 0.3][: sol.dim])
    f = sol.f(x[None])[0]
    assert f == pytest.approx(fd_laplacian(sol, x), rel=1e-5, abs=1e-5)


def test_harmonic_when_alpha_equals_a():
    sol = CornerSingular2D(2 / 3, 2 / 3)
    x = np.random.default_rng(0).uniform(-1, 1, (20, 2))
    assert not sol.f(x).any()


def test_point_on_ray_uses_fd_consistent_gradient():
    sol = CornerSingular2D(0.75, math.pi / 2)
    x = np.array([1.0, 0.0])
    assert sol.u(x[None])[0] == 0.0
    # approached from above the ray, phi is continuous at 0
    hint = np.array([[1.0, 0.1]])
    g = sol.grad(x[None], hint)[0]
    np.testing.assert_allclose(g, [0.0, math.pi / 2], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(g, fd_grad(sol, x + [0, 1e-3], 1e-6), rtol=1e-2, atol=1e-3)


def test_bank_hint_selects_lower_branch():
    sol = CornerSingular2D(0.75, 2 / 3)
    x = np.array([[0.5, 0.0], [0.5, 0.0]])
    hint = np.array([[0.6, 0.1], [0.6, -0.1]])
    upper, lower = sol.u(x, hint)
    assert upper == 0.0
    assert lower == pytest.approx(0.5**0.75 * math.sin(4 * math.pi / 3))


def test_singular_point_errors():
    sol = CornerSingular2D(0.75, 0.5)
    with pytest.raises(SingularPointError):
        sol.f(np.zeros((1, 2)))
    with pytest.raises(SingularPointError):
        sol.grad(np.zeros((1, 2)))
    assert sol.u(np.zeros((1, 2)))[0] == 0.0
    with pytest.raises(ValueError):
        CornerSingular2D(0.0, 1.0)


def test_fichera_values():
    sol = SmoothFichera3D()
    assert sol.u(np.zeros((1, 3)))[0] == 0.0
    u, g, f = sol.eval([0.5, 0.0, 0.0])
    assert u[0] == pytest.approx(1.0) and f[0] == pytest.approx(6 * math.pi**2)


def test_besov_regularity():
    L = domain("LShape")
    reg = besov_regularity(CornerSingular2D(0.75, 0.5), L.corners)
    assert reg.s == 1.75 and reg.corners == (1.75,)
    reg = besov_regularity(CornerSingular2D(0.75, 1.0, (0.0, 1.0)), L.corners)
    assert reg.s == 1.75 and reg.corners == (math.inf,)
    assert besov_regularity(SmoothFichera3D()).s == math.inf
    assert besov_regularity(CornerSingular2D(2.0, 0.5), L.corners).integer_exponent


@pytest.mark.parametrize(
    "key",
    [
        "corner{alpha=0.75,a=0.5,x0=0.0,0.0}",
        "corner{alpha=2.375,a=0.6666666666666666,x0=0.5,0.0}",
        "fichera",
        "poly2d{1=0.25,x=1.0,y=-0.5}",
        "poly3d{1=0.25,x=1.0,y=-0.5,z=0.75}",
    ],
)
def test_key_round_trip(key):
    sol = parse_solution(key)
    assert parse_solution(sol.key).key == sol.key == key


def test_key_expressions():
    sol = parse_solution("corner{alpha=10/9,a=2/3*pi,x0=0,1}")
    assert sol.alpha == pytest.approx(10 / 9)
    assert sol.a == pytest.approx(2 * math.pi / 3)
    assert sol.x0 == (0.0, 1.0)
    with pytest.raises(ValueError):
        parse_solution("bessel{nu=1}")
    with pytest.raises(ValueError):
        parse_solution("corner{alpha=__import__('os'),a=1}")


def test_polynomial_degree_and_values():
    p = Polynomial.from_dict({(2, 1): 3.0, (0, 0): 1.0})
    assert p.degree == 3
    assert p.u(np.array([[2.0, -1.0]]))[0] == pytest.approx(1 - 12)
    with pytest.raises(ValueError):
        Polynomial.from_dict({(1,): 1.0}, dim=2)
