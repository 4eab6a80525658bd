"""Ortho-isospectral covers with different systoles (k = 2)."""

import itertools
import math

from orthospec.covers import build_special_X, cover_family
from orthospec.ortho_enum import ortho_spectrum, systole
from orthospec.spectra import compare_spectra


def main(k=2, L=6.0):
    X = build_special_X(2 ** k, 2.0)
    la = math.acosh(1.5) / 2 ** k
    covs = [cover_family(k, m, X) for m in range(k + 1)]
    specs = [ortho_spectrum(C, L, keep_reps=False) for C in covs]
    for m, (C, s) in enumerate(zip(covs, specs)):
        print(f"m={m}: {len(s)} orthos below {L}, systole = {systole(C, 2.0) / la:.6f} l_alpha")
    for a, b in itertools.combinations(range(k + 1), 2):
        c = compare_spectra(specs[a], specs[b], 1e-8)
        print(f"m={a} vs m={b}: {c.verdict} (max discrepancy {c.max_discrepancy:.1e})")


if __name__ == "__main__":
    main()
