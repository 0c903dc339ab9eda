"""Tour of the periodic Riesz kernel.

Builds the kernel table for a few exponents, prints g and its derivatives
at sample points, compares the table with direct Hurwitz zeta evaluation
and checks the small-distance behaviour ``g(x) ~ x^-s``.

Run: python demos/kernel_tour.py
"""
import numpy as np

from rieszgas.special import ModelParams, build_kernel_table, hurwitz_zeta, riesz_constants


def main():
    x = np.array([1e-3, 0.01, 0.1, 0.25, 0.5])
    for s in (0.3, 0.5, 0.7):
        model = build_kernel_table(ModelParams(s, 1.0, 2))
        c_s, c_prime = riesz_constants(s)
        print(f"s = {s}: c_s = {c_s:.12f}, c_s'/c_s = {c_prime / c_s:.12f}")
        direct = hurwitz_zeta(s, x) + hurwitz_zeta(s, 1.0 - x)
        print("      x            g(x)        table - direct      g(x) x^s")
        for xi, gv, dv in zip(x, model.g(x), direct):
            print(f"  {xi:8.3g}  {gv:16.10f}  {gv - dv:14.3e}  {gv * xi ** s:12.6f}")
        print(f"  g'(1/2) = {float(model.g1(0.5)):.2e} (zero by symmetry)\n")


if __name__ == "__main__":
    main()
