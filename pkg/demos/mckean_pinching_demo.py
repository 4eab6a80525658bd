"""Systole lower bounds from spectra, and orthos on pinched tori."""

from orthospec.ortho_enum import ortho_spectrum, systole
from orthospec.spectra import mckean_systole_bound, pinching_experiment
from orthospec.surfaces import build_one_holed_torus, build_pants


def main():
    for name, S, cap, L in [("pants(1,2,3)", build_pants(1.0, 2.0, 3.0), None, 8.0),
                            ("torus(1,0.3,2.5)", build_one_holed_torus(1.0, 0.3, 2.5), 2.5, 10.0),
                            ("torus(0.5,0,3)", build_one_holed_torus(0.5, 0.0, 3.0), 3.0, 12.0)]:
        b, d = mckean_systole_bound(ortho_spectrum(S, L, keep_reps=False), pants_length_cap=cap,
                                    return_details=True)
        print(f"{name:18s} bound {b:.4f}  systole {systole(S, 6.0):.4f}  flagged {d.get('flagged', False)}")
    out = pinching_experiment()
    print(f"pinching constant M = {out['M']:.4f}")
    for row in out["rows"]:
        print(f"  eps={row['eps']}: crossing orthos {[round(x, 4) for x in row['crossing']]}")


if __name__ == "__main__":
    main()
