"""Recover a one-holed torus from its ortho spectrum, for both twist signs."""

from orthospec.ortho_enum import ortho_spectrum
from orthospec.spectra import reconstruct_torus
from orthospec.surfaces import build_one_holed_torus


def main():
    for tw in (0.3, -0.3, 0.0):
        s = ortho_spectrum(build_one_holed_torus(1.0, tw, 2.5), 10.0, keep_reps=False)
        r = reconstruct_torus(s)
        print(f"twist {tw:+.1f}: l_gamma={r.l_gamma:.9f} l_alpha={r.l_alpha:.9f} |twist|={r.twist_abs:.9f}")


if __name__ == "__main__":
    main()
