"""Measurement-induced unitary holonomies on small Hilbert spaces.

Thin Python layer over the C++ core: subspaces and principal angles,
projection sequences and phase loops, Bargmann invariants and solid
angles, and the repeat-until-success measurement graphs.
"""

from holonomy._core import (
    MeasurementGraph,
    Subspace,
    TraversalTrace,
    apply_projection,
    bargmann_invariant,
    bloch_from_state,
    build_general_rus_graph,
    build_qubit_rus_graph,
    complement,
    compose_diag_unitary,
    equal_up_to_phase,
    expected_steps,
    extract_holonomy,
    isometry_report,
    mix_seed,
    orthonormalize,
    phase_loop_operator,
    phase_loop_scale,
    phase_loop_states,
    principal_angles,
    projector,
    run_protocol,
    run_protocol_forced,
    same_span,
    solid_angle,
    state_from_bloch,
    survival_probability,
    svd,
)

__version__ = "1.0.0"

__all__ = [
    "MeasurementGraph",
    "Subspace",
    "TraversalTrace",
    "apply_projection",
    "bargmann_invariant",
    "bloch_from_state",
    "build_general_rus_graph",
    "build_qubit_rus_graph",
    "complement",
    "compose_diag_unitary",
    "equal_up_to_phase",
    "expected_steps",
    "extract_holonomy",
    "isometry_report",
    "mix_seed",
    "orthonormalize",
    "phase_loop_operator",
    "phase_loop_scale",
    "phase_loop_states",
    "principal_angles",
    "projector",
    "run_protocol",
    "run_protocol_forced",
    "same_span",
    "solid_angle",
    "state_from_bloch",
    "survival_probability",
    "svd",
]
