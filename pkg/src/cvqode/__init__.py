"""Variational continuous-variable quantum circuits as trial functions for 1D IVPs."""

__version__ = "0.1.0"

from cvqode.cost import HardwareEstimate, estimate, estimate_step, estimate_total
from cvqode.fock import (
    FockState,
    InvalidCutoffError,
    apply_gate,
    beamsplitter_gate,
    displacement_gate,
    expectation,
    kerr_gate,
    ladder_matrices,
    number_matrix,
    quadrature_matrices,
    rotation_gate,
    squeeze_gate,
)
from cvqode.gradients import (
    DualState,
    GradientBundle,
    NonGaussianCircuitError,
    batch_gradients,
    evaluate_with_gradients,
    finite_difference_grad,
    parameter_shift_displacement,
)
from cvqode.network import (
    LayerParams,
    NetworkConfig,
    NetworkParams,
    forward,
    init_params,
    param_count,
)
from cvqode.problems import (
    PROBLEMS,
    IVProblem,
    ReferenceSolution,
    linear_problem,
    reference_solution,
    riccati_problem,
    rk4_solve,
    stiff_problem,
)
from cvqode.training import (
    CollocationGrid,
    TrainConfig,
    TrainingDiverged,
    TrainState,
    adam_step,
    make_grid,
    ode_loss,
    ode_loss_grad,
    train,
)
