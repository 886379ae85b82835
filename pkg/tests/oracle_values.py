"""Frozen reference values, computed independently of the package.

Run ``python3 tests/oracle_values.py`` to recompute them with scipy's
adaptive quadrature in polar coordinates around the singular point.
"""
import math

# integral of f * phi_i over the triangle (0,0), (0.5,0.5), (0,0.5) (L-shape
# coarse cell at the reentrant corner), f = (a^2 - alpha^2) r^(alpha-2) sin(a phi),
# alpha = 0.75, a = 1/2; phi_i the P1 hat functions in vertex order
CORNER_CELL = ((0.0, 0.0), (0.5, 0.5), (0.0, 0.5))
CORNER_LOAD = (-0.06599865906510538, -0.020455952141175272, -0.02904304215765375)

# alpha = 0.75, a = 2/3 on a cell below the slit, phi in (3 pi/2, 7 pi/4)
SLIT_CELL = ((0.0, 0.0), (0.0, -0.5), (0.5, -0.5))
SLIT_LOAD = (0.012198019669354847, 0.003501259250353237, 0.005647255501662899)

# nodal values of r^0.75 sin(2/3 phi) at (0.5, 0) on the upper and lower slit banks
SLIT_BANK_VALUES = (0.0, 0.5**0.75 * math.sin(2 / 3 * 2 * math.pi))


def _polar_load(cell, alpha, a, phi_range):
    import numpy as np
    from scipy import integrate

    P = np.asarray(cell, float)
    O, B, C = P
    coef = a * a - alpha * alpha
    J = np.column_stack([B - O, C - O])
    Jinv = np.linalg.inv(J)

    def radius(phi):
        d = np.array([math.cos(phi), math.sin(phi)])
        # O + r d on the line B + t (C - B)
        M = np.column_stack([d, B - C])
        r, _ = np.linalg.solve(M, B - O)
        return r

    out = []
    for i in range(3):
        def integrand(r, phi):
            x = O + r * np.array([math.cos(phi), math.sin(phi)])
            xi, eta = Jinv @ (x - O)
            lam = (1 - xi - eta, xi, eta)[i]
            return coef * r ** (alpha - 2) * math.sin(a * phi) * lam * r

        val, _ = integrate.dblquad(integrand, phi_range[0], phi_range[1], 0, radius, epsabs=1e-14, epsrel=1e-12)
        out.append(val)
    return tuple(out)


if __name__ == "__main__":
    print("CORNER_LOAD =", _polar_load(CORNER_CELL, 0.75, 0.5, (math.pi / 4, math.pi / 2)))
    print("SLIT_LOAD =", _polar_load(SLIT_CELL, 0.75, 2 / 3, (3 * math.pi / 2, 7 * math.pi / 4)))
