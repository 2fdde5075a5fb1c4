"""Generate the relative dipole matrix elements for the 87Rb D1 line.

Elements are <F mF | e r_q | F' mF'> in units of <J=1/2||e r||J'=1/2>,
using the hyperfine reduction of the Wigner-Eckart theorem:

    (-1)^(F' + J + 1 + I) sqrt((2F' + 1)(2J + 1)) {J J' 1; F' F I} <F mF | F' 1 mF' q>

Branching ratios are |element|^2 normalized over all ground sublevels
reachable from each excited sublevel.

Usage: python3 tools/gen_rb87_d1_table.py > crates/core/data/rb87_d1_dipoles.txt
"""

from sympy import Rational, nsimplify, sqrt
from sympy.physics.wigner import clebsch_gordan, wigner_6j

I_NUC = Rational(3, 2)
J = Rational(1, 2)
JP = Rational(1, 2)


def element(f, m, fp, mp):
    q = m - mp
    if abs(q) > 1:
        return 0
    phase = (-1) ** (fp + J + 1 + I_NUC)
    return (
        phase
        * sqrt((2 * fp + 1) * (2 * J + 1))
        * wigner_6j(J, JP, 1, fp, f, I_NUC)
        * clebsch_gordan(fp, 1, f, mp, q, m)
    )


def label(prefix, f, m):
    return f"{prefix}{f}:{m:+d}" if m != 0 else f"{prefix}{f}:0"


def main():
    grounds = [(f, m) for f in (1, 2) for m in range(-f, f + 1)]
    excited = [(f, m) for f in (1, 2) for m in range(-f, f + 1)]
    rows = []
    for fp, mp in excited:
        entries = []
        for f, m in grounds:
            d = nsimplify(element(f, m, fp, mp))
            if d != 0:
                entries.append((f, m, d))
        total = sum(d**2 for _, _, d in entries)
        for f, m, d in entries:
            rows.append((label("S", f, m), label("P", fp, mp), d, d**2 / total))
    print("# pumpprobe dipole table v1")
    print("# 87Rb D1 (5S1/2 -> 5P1/2), relative elements <F mF|e r_q|F' mF'> / <J||e r||J'>")
    print("# generated by tools/gen_rb87_d1_table.py")
    print("# ground excited relative_element branching_ratio")
    for g, e, d, b in sorted(rows, key=lambda r: (r[1][1], int(r[1][3:]), r[0][1], int(r[0][3:]))):
        print(f"{g}\t{e}\t{float(d):.17g}\t{float(b):.17g}")


if __name__ == "__main__":
    main()
