from sglamp.component.solvers.base import (estimate_step_size,subgradient_residual,relative_change,
                                           trace_diverged,trace_frame,TraceRecorder)
from sglamp.component.solvers.amp import solve_amp,amp_calibrated_lambda,threshold_for_lambda,effective_lambda
from sglamp.component.solvers.proximal import solve_ista,solve_fista,solve_blockwise,fista_momentum
from sglamp.component.solvers.vamp import solve_vamp,RidgeSolver
