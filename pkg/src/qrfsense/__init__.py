"""Learning agent locations from simulated RF fields via a quantum probe.

Pipeline: a 2D urban scene feeds an image-method ray tracer; the multipath
gains and delays superpose into a rotating-frame drive on a variationally
prepared multi-qubit probe; Pauli-Z readouts train a small classifier head
jointly with the probe circuit. An LSTM over the raw multipath phase
sequence serves as the fully-informed classical benchmark.
"""

from .scene import (
    LocationSample,
    Rect,
    Scene,
    SceneError,
    TargetRegion,
    label,
    load_canonical_scene,
    load_scene,
    sample_locations,
)
from .raytracer import (
    SPEED_OF_LIGHT,
    Path,
    PathSet,
    RadioConfig,
    reflect_point,
    segment_visible,
    trace_paths,
    validate_against_oracle,
)
from .field import (
    FieldInteraction,
    apply_field,
    calibrate_time,
    interaction_params,
    interaction_unitary,
    superpose,
)
from .qsim import (
    GateOp,
    adjoint_grad,
    apply_gate,
    expectation_z,
    parameter_shift_grad,
    run_circuit,
    zero_state,
)
from .model import (
    HeadParams,
    Prediction,
    cross_entropy,
    head_forward,
    hybrid_grad,
    mse,
    predict,
    prepare_probe,
    sense,
)
from .baseline import (
    LstmParams,
    count_parameters,
    lstm_forward,
    phase_sequence,
)
from .harness import (
    ExperimentConfig,
    evaluate,
    generate_dataset,
    load_dataset,
    run_trials,
    train_baseline,
    train_hybrid,
    write_dataset,
)

__version__ = "0.1.0"
