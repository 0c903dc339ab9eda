"""Transport maps for the three test-function families.

For a cosine, an indicator and a power singularity this computes psi by
the spectral multiplier, compares it with the closed form, and prints the
limiting variance sigma_xi^2 from the boundary formula and from the
Fourier sum.

Run: python demos/transport_maps.py
"""
import numpy as np

from rieszgas.transforms import (
    TestFunction,
    psi_closed_indicator,
    psi_closed_power,
    riesz_inverse_spectral,
    sigma_xi_squared,
    sigma_xi_squared_spectral,
)

S, BETA = 0.5, 2.0


def main():
    x = np.arange(1, 16) / 32
    cases = [
        ("cosine m=1", TestFunction.cosine(1), None),
        ("indicator a=1/8", TestFunction.indicator(0.125), lambda t: psi_closed_indicator(0.125, S, t)),
        ("power alpha=0.2", TestFunction.power(0.2), lambda t: psi_closed_power(0.2, S, t)),
    ]
    for label, xi, closed in cases:
        psi = riesz_inverse_spectral(xi, 1 << 14, s=S)
        line = f"{label:18s} max|psi| = {np.abs(psi.grid).max():.6f}"
        if closed is not None:
            # grid values are the spectral solution; psi(x) itself would use the closed form
            keep = np.abs(x - 0.125) > 1e-9
            nodes = np.rint(x[keep] * psi.size).astype(int)
            err = np.max(np.abs(psi.grid[nodes] - closed(x[keep])))
            line += f", spectral vs closed form {err:.1e}"
        print(line)
        if xi.kind != "power":
            print(f"{'':18s} sigma^2 = {sigma_xi_squared(xi, psi, BETA):.8f} (boundary), "
                  f"{sigma_xi_squared_spectral(xi, S, BETA, 1 << 18):.8f} (Fourier)")


if __name__ == "__main__":
    main()
