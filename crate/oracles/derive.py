"""Reference values for the Rust test suite, computed independently.

Uses sympy for exact algebra and mpmath at 60 digits for escape rates.
Writes crates/core/tests/data/oracle_values.json; rerun with

    python3 oracles/derive.py
"""

import json
from pathlib import Path

import mpmath as mp
import sympy as sp

mp.mp.dps = 60
z = sp.symbols("z")

SUITE = {
    "z^2": (z**2, sp.Integer(1)),
    "z^2-1": (z**2 - 1, sp.Integer(1)),
    "1/z^2": (sp.Integer(1), z**2),
    "1/z^3": (sp.Integer(1), z**3),
    "2/(z-1)^3+1": (sp.expand(2 + (z - 1) ** 3), sp.expand((z - 1) ** 3)),
    "(z^3+0.1)/z": (z**3 + sp.Rational(1, 10), z),
}
PROBES = [(3, 0), (1, 1), (0.5, 0), (-2, 0.3), (0.1, -0.7)]


def canonical_lift(num, den):
    """Ascending coefficient lists (F0, F1) scaled to max modulus 1."""
    d = max(sp.degree(num, z), sp.degree(den, z))
    f1 = [complex(sp.Poly(num, z).coeff_monomial(z**j)) for j in range(d + 1)]
    f0 = [complex(sp.Poly(den, z).coeff_monomial(z**j)) for j in range(d + 1)]
    m = max(abs(c) for c in f0 + f1)
    return d, [mp.mpc(c) / m for c in f0], [mp.mpc(c) / m for c in f1]


def hom(coeffs, d, z0, z1):
    return mp.fsum(c * z0 ** (d - j) * z1**j for j, c in enumerate(coeffs))


def escape_rate(lift, z0, z1, digits=40):
    """G(z0, z1) = lim d^-n log ||F^n(z0, z1)||, renormalized each step."""
    d, f0, f1 = lift
    n = mp.sqrt(abs(z0) ** 2 + abs(z1) ** 2)
    acc = mp.log(n)
    z0, z1 = z0 / n, z1 / n
    steps = int(digits * mp.log(10) / mp.log(d)) + 10
    for k in range(1, steps + 1):
        w0, w1 = hom(f0, d, z0, z1), hom(f1, d, z0, z1)
        n = mp.sqrt(abs(w0) ** 2 + abs(w1) ** 2)
        acc += mp.log(n) / mp.mpf(d) ** k
        z0, z1 = w0 / n, w1 / n
    return acc


def escape_values():
    out = {}
    for name, (num, den) in SUITE.items():
        lift = canonical_lift(num, den)
        base = escape_rate(lift, mp.mpc(0), mp.mpc(1))
        pts = []
        for re, im in PROBES:
            p = escape_rate(lift, mp.mpc(1), mp.mpc(re, im)) - base
            pts.append({"z": [re, im], "potential": float(p)})
        out[name] = {"base_height": float(base), "potentials": pts}
    return out


def sorted_roots(poly):
    roots = [complex(r) for r in mp.polyroots([complex(c) for c in poly], maxsteps=200, extraprec=200)]
    roots.sort(key=lambda c: (round(c.real, 12), round(c.imag, 12)))
    return [[r.real, r.imag] for r in roots]


def main():
    second = sp.expand((z**2 - 1) ** 2 - 1)
    values = {
        "second_iterate_z2m1": [float(sp.Poly(second, z).coeff_monomial(z**j)) for j in range(5)],
        # (z^2 - 1)^2 - 1 = 10, descending coefficients for polyroots
        "fiber_z2m1_at_10_depth2": sorted_roots([1, 0, -2, 0, -10]),
        "fiber_z2m1_closed_form": sorted(
            [
                [float(sp.re(v)), float(sp.im(v))]
                for v in sp.solve(sp.Eq(second, 10), z)
            ],
            key=lambda c: (round(c[0], 12), round(c[1], 12)),
        ),
        "cube_roots_minus_tenth": sorted_roots([1, 0, 0, 0.1]),
        "preimages_of_infinity_z3p01_over_z": {"0": 1, "inf": 2},
        "escape": escape_values(),
    }
    path = Path(__file__).resolve().parents[1] / "crates/core/tests/data/oracle_values.json"
    path.write_text(json.dumps(values, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
