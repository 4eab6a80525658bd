"""Basmajian and Bridgeman-Kahn partial sums on pants(2,2,2) as the cutoff grows."""

from orthospec.identities import basmajian_check, bridgeman_check
from orthospec.ortho_enum import ortho_spectrum
from orthospec.surfaces import build_pants


def main():
    P = build_pants(2.0, 2.0, 2.0)
    big = ortho_spectrum(P, 16.0, keep_reps=False)
    print(f"{'L':>5} {'entries':>8} {'basmajian':>11} {'err':>9} {'bridgeman':>11} {'err':>9}")
    for L in (6.0, 8.0, 10.0, 12.0, 14.0, 16.0):
        s = big.truncate(L)
        b, f = basmajian_check(s), bridgeman_check(s)
        print(f"{L:5.1f} {len(s):8d} {b.partial_sum:11.6f} {b.target - b.partial_sum:9.2e} "
              f"{f.partial_sum:11.6f} {f.target - f.partial_sum:9.2e}")


if __name__ == "__main__":
    main()
