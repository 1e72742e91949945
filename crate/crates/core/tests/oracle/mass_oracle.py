"""Symbolic limits of the hyperbolic mass flux, frozen into oracle_values.rs.

With h = p dr^2 + q sinh^2 r g_S, the V_(0) = cosh r flux density per unit
sphere area is (n-1) sinh^{n-1} r [cosh r coth r (p - q) - cosh r q' + q sinh r].
"""
import sympy as sp

r, mu, M = sp.symbols("r mu M", positive=True)
x = sp.symbols("x", positive=True)  # x = e^{-r}


def flux(n, p, q):
    s, c = sp.sinh(r), sp.cosh(r)
    return (n - 1) * s ** (n - 1) * (c * c / s * (p - q) - c * sp.diff(q, r) + q * s)


def expand(expr, order):
    e = sp.simplify(expr.rewrite(sp.exp).subs(sp.exp(r), 1 / x))
    return sp.series(e, x, 0, order).removeO()


lines = []
for n in (3, 4, 5, 6):
    wang = expand(flux(n, 0, mu * sp.exp(-n * r)), 3)
    rho = sp.sinh(r)
    V = 1 + rho**2 - 2 * M * rho ** (2 - n)
    sads = expand(flux(n, 2 * M * rho ** (2 - n) / V, 0), 3)
    c_wang = sp.nsimplify(sp.limit(wang, x, 0) / mu)
    c_sads = sp.nsimplify(sp.limit(sads, x, 0) / M)
    # first correction: the x^1 coefficient must vanish so the remainder is O(e^{-2r})
    w1 = sp.simplify(sp.diff(wang, x).subs(x, 0))
    s1 = sp.simplify(sp.diff(sads, x).subs(x, 0))
    assert w1 == 0 and s1 == 0, (n, w1, s1)
    lines.append(f"    ({n}, {float(c_wang)!r}, {float(c_sads)!r}),")
    print(n, c_wang, c_sads)

with open("oracle_values.rs", "w") as f:
    f.write("// Generated by mass_oracle.py; do not edit.\n")
    f.write("// (n, flux limit per unit mu0 for q = mu0 e^{-nr}, flux limit per unit M for Schwarzschild-AdS),\n")
    f.write("// both per unit sphere area.\n")
    f.write("pub const FLUX_LIMITS: &[(usize, f64, f64)] = &[\n")
    f.write("\n".join(lines) + "\n];\n")
