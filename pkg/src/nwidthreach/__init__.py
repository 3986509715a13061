"""Width estimation for snapshot clouds and reachable sets of bilinear systems.

The package is organized around a small pipeline:

* :mod:`~nwidthreach.subspaces` -- affine/linear subspace geometry (distances,
  joins, sums) in finite-dimensional real or complex coordinate spaces.
* :mod:`~nwidthreach.widths` -- empirical linear and affine Kolmogorov width
  estimates for finite point clouds, plus a brute-force oracle for tiny cases.
* :mod:`~nwidthreach.operators` -- checks for maps of the form
  ``offset + linear(x) + nonlinear(x)``: how a neighborhood of a subspace is
  transported, and the resulting width-transport inequalities.
* :mod:`~nwidthreach.volterra` -- series expansion of the endpoint map of a
  bilinear system ``x' = (A + u B) x``, with per-term and tail certificates
  and an exact matrix-exponential oracle.
* :mod:`~nwidthreach.models` -- concrete bilinear models: the spectrally
  truncated simply supported beam under a contraction force, and a
  single-input Schrodinger equation in its eigenbasis.
* :mod:`~nwidthreach.bounds` -- closed-form width bounds for reachable sets,
  with validity gating.
* :mod:`~nwidthreach.reachset` -- sampling of admissible control sets,
  endpoint cloud propagation, and comparison of empirical widths against the
  closed-form bounds.
* :mod:`~nwidthreach.cli` -- ``nwidth-reach`` command-line front end.
"""

from nwidthreach.subspaces import (
    AffineSubspace,
    affine_join,
    orthonormal_columns,
    point_distance,
    set_distance,
    subspace_sum,
)
from nwidthreach.widths import (
    SnapshotCloud,
    WidthProfile,
    affine_width_estimate,
    exact_width_oracle,
    linear_width_estimate,
    width_profile,
)
from nwidthreach.operators import (
    BoundedSampleSet,
    CheckReport,
    OperatorSpec,
    apply_operator,
    image_inclusion_check,
    lipschitz_bound,
    pushforward_subspace,
    split_transport_check,
    transport_check,
)
from nwidthreach.volterra import (
    BilinearModel,
    ControlSignal,
    SeriesDivergenceError,
    endpoint_exact,
    kernel_eval,
    tail_bound,
    term_bound,
    volterra_terms,
)
from nwidthreach.models import (
    BeamSpec,
    SchrodingerSpec,
    beam_b_matrix,
    beam_eigen,
    beam_model,
    schrodinger_model,
)
from nwidthreach.bounds import (
    BoundReport,
    beam_width_bound,
    bilinear_width_bound,
    linear_gain_bound,
    schrodinger_width_bound,
)
from nwidthreach.reachset import (
    ComparisonReport,
    ControlSet,
    ReachRow,
    compare_report,
    constructive_residual,
    constructive_subspace,
    known_control_width,
    propagate_cloud,
    sample_controls,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSubspace",
    "BeamSpec",
    "BilinearModel",
    "BoundReport",
    "BoundedSampleSet",
    "CheckReport",
    "ComparisonReport",
    "ControlSet",
    "ControlSignal",
    "OperatorSpec",
    "ReachRow",
    "SchrodingerSpec",
    "SeriesDivergenceError",
    "SnapshotCloud",
    "WidthProfile",
    "affine_join",
    "affine_width_estimate",
    "apply_operator",
    "beam_b_matrix",
    "beam_eigen",
    "beam_model",
    "beam_width_bound",
    "bilinear_width_bound",
    "compare_report",
    "constructive_residual",
    "constructive_subspace",
    "endpoint_exact",
    "exact_width_oracle",
    "image_inclusion_check",
    "kernel_eval",
    "known_control_width",
    "linear_gain_bound",
    "linear_width_estimate",
    "lipschitz_bound",
    "orthonormal_columns",
    "point_distance",
    "propagate_cloud",
    "pushforward_subspace",
    "sample_controls",
    "schrodinger_model",
    "schrodinger_width_bound",
    "set_distance",
    "split_transport_check",
    "subspace_sum",
    "term_bound",
    "transport_check",
    "volterra_terms",
    "width_profile",
]
