"""Ortho spectra of hyperbolic surfaces with geodesic boundary."""

from .covers import build_special_X, cover_family, subgroup_from_cyclic_hom
from .identities import basmajian_check, bridgeman_check
from .ortho_enum import OrthoSpectrum, closed_geodesics, ortho_spectrum, systole
from .spectra import (
    compare_spectra,
    granulosity,
    mckean_systole_bound,
    ortho_exponent,
    packing_exponent,
    reconstruct_torus,
)
from .surfaces import (
    FuchsianSurface,
    SurfaceSpec,
    build_from_pants_graph,
    build_one_holed_torus,
    build_pants,
    validate_surface,
)

__version__ = "0.1.0"
