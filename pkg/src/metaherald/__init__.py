"""Heralded and entangled-photon imaging through polarization-selective metasurfaces.

Library layout:

- :mod:`metaherald.polarization` — two-photon states, projectors, heralded partial traces
- :mod:`metaherald.metasurface` — amplitude masks, slit lattices, per-slit Jones matrices
- :mod:`metaherald.imaging` — analytic expected images and the closed-form visibility laws
- :mod:`metaherald.montecarlo` — seeded coincidence-count simulation with camera background
- :mod:`metaherald.bell` — CHSH correlations, setting search, state-model calibration
- :mod:`metaherald.propagation` / :mod:`metaherald.hologram` — angular-spectrum diffraction
  and 8-level phase hologram encoding
- :mod:`metaherald.cli` — the ``metaherald`` command (mask / image / sweep / bell / hologram)
"""

from .bell import (
    CANONICAL_SINGLET_SETTING,
    ChshSetting,
    calibrate_model,
    chsh_S,
    chsh_from_counts,
    correlation_E,
    max_chsh_S,
    measure_chsh,
)
from .hologram import (
    design_hologram,
    encode_hologram,
    reconstruct_hologram,
    scramble_metric,
    synthesize_field,
    builtin_target_image,
)
from .imaging import (
    IntensityImage,
    VisibilityCurve,
    expected_image,
    pipeline_visibility,
    region_intensities,
    sweep_polarizer,
    visibility,
    visibility_closed_form,
    write_visibility_csv,
)
from .metasurface import (
    AmplitudeMask,
    SlitLayout,
    generate_star_triangle_mask,
    layout_star_triangle,
    measurement_operator,
    read_layout,
    slit_jones,
    write_layout,
)
from .montecarlo import (
    CoincidenceImage,
    DetectorConfig,
    estimate_visibility,
    sample_coincidences,
)
from .polarization import (
    StateModel,
    heralded_signal_state,
    mixed_state,
    model_state,
    projector,
    pure_state,
    tensor,
    trace_expectation,
)
from .propagation import (
    ComplexField,
    PropagationPlan,
    angular_spectrum_propagate,
    backpropagate,
    propagate_padded,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
