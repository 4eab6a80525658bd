"""Ortho exponent against the packing exponent of boundary-lift intervals."""

import math

from orthospec.ortho_enum import ortho_spectrum
from orthospec.spectra import boundary_interval_radii, ortho_exponent, packing_exponent
from orthospec.surfaces import build_pants


def main():
    P = build_pants(2.0, 2.0, 2.0)
    big = ortho_spectrum(P, 16.0, keep_reps=False)
    fo = ortho_exponent([big.truncate(L) for L in (8.0, 10.0, 12.0, 14.0, 16.0)])
    items = boundary_interval_radii(P, 14.0, with_feet=True)
    fp = packing_exponent([r for r, _, _ in items])
    worst = max(r * math.exp(l) for r, l, _ in items)
    print(f"ortho exponent   {fo.estimate:.4f}  window {fo.window}")
    print(f"packing exponent {fp.estimate:.4f}  window {fp.window}")
    print(f"{len(items)} lifts, max r e^l = {worst:.12f}")


if __name__ == "__main__":
    main()
