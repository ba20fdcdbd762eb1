"""Field-aware tensor approximation toolkit.

Real float64 arrays are treated as tensors over the reals and are never
promoted behind your back; pass complex128 arrays to work over the complex
field. All solvers are deterministic functions of their seed.
"""

from ._core import (
    __version__,
    alternate,
    block_term,
    classify_2x2x2,
    cp_als,
    hyperdeterminant,
    masked_cp_als,
    mrank,
    open_witness,
    run_experiment_json,
    splr,
    structured_point,
    structured_tangent,
    sufficient_condition,
    symmetric_approx,
    symmetrize,
    tangent_witness,
    truncate_multilinear,
)

__all__ = [
    "__version__",
    "alternate",
    "block_term",
    "classify_2x2x2",
    "cp_als",
    "hyperdeterminant",
    "masked_cp_als",
    "mrank",
    "open_witness",
    "run_experiment_json",
    "splr",
    "structured_point",
    "structured_tangent",
    "sufficient_condition",
    "symmetric_approx",
    "symmetrize",
    "tangent_witness",
    "truncate_multilinear",
]
