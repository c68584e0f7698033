import numpy as np
import scipy.linalg
from sglamp.constant import *
from sglamp.component.model import ProblemInstance
from sglamp.component.prox import make_prox_input,prox_sgl,prox_onsager
from sglamp.component.solvers.base import TraceRecorder,relative_change,is_diverged,divergence_message
from sglamp.entity.config_entity import SolverConfig
from sglamp.entity.artifact_entity import SolverTrace
from sglamp.exception import ConfigurationError,NumericalDegeneracyError
from sglamp.logger import logging


class RidgeSolver:
    """
    Solves (X^T X + rho I) beta = b and returns tr((X^T X + rho I)^-1) alongside.

    With use_svd the economy SVD of X is computed once and reused for every rho; otherwise
    X^T X + rho I is Cholesky-factored on each call.
    """

    def __init__(self,design:np.ndarray,use_svd:bool):
        self.p=design.shape[1]
        self.use_svd=use_svd
        if use_svd:
            _,singular,right_t=scipy.linalg.svd(design,full_matrices=False)
            self.singular_sq=singular**2
            self.right=right_t.T
        else:
            self.gram=design.T@design

    def solve(self,rho:float,rhs:np.ndarray):
        if self.use_svd:
            projected=self.right.T@rhs
            beta=self.right@(projected/(self.singular_sq+rho))+(rhs-self.right@projected)/rho
            trace=float(np.sum(1/(self.singular_sq+rho))+(self.p-self.singular_sq.size)/rho)
            return beta,trace
        factor=scipy.linalg.cholesky(self.gram+rho*np.eye(self.p),lower=True)
        beta=scipy.linalg.cho_solve((factor,True),rhs)
        inverse_factor=scipy.linalg.solve_triangular(factor,np.eye(self.p),lower=True)
        return beta,float(np.sum(inverse_factor**2))


def solve_vamp(instance:ProblemInstance,config:SolverConfig,reference:np.ndarray=None,
               initial_rho:float=VAMP_INITIAL_RHO)->SolverTrace:
    """
    Damped VAMP for the SGL cost, alternating a ridge (LMMSE) stage and the SGL prox:

        beta   = (X^T X + rho I)^-1 (X^T y + u),   sigma_b = tr(...)/p
        r      = (beta - sigma_b u)/(1 - sigma_b rho)
        z      = eta(r, lambda sigma_b/(1 - sigma_b rho))
        sigma_z= <eta'> sigma_b/(1 - sigma_b rho)
        u     += (1-D)(z/sigma_z - beta/sigma_b)
        rho   += (1-D)(1/sigma_z - 1/sigma_b)

    starting from u = 0, rho = initial_rho. The recorded iterate is z; a run stops once z and the
    messages (u, rho) have all settled.
    """
    design,response,partition=instance.design,instance.response,instance.partition
    lam,gamma=instance.lam,instance.gamma
    keep=1-config.damping
    recorder=TraceRecorder(instance,reference)
    recorder.start()
    ridge=RidgeSolver(design,use_svd=config.max_iters>VAMP_SVD_MIN_ITERS)
    design_response=design.T@response
    recorder.stop()
    precision_mean=np.zeros(instance.p)
    if not initial_rho>0:
        raise ConfigurationError(f"vamp initial rho must be positive, got {initial_rho}",key='initial_rho')
    rho=float(initial_rho)
    estimate=np.zeros(instance.p)
    recorder.record(0,estimate)
    logging.info(f"vamp started: damping={config.damping} lambda={lam} gamma={gamma} svd={ridge.use_svd}")
    converged=False
    diagnostic=""
    iteration=0
    for iteration in range(1,config.max_iters+1):
        recorder.start()
        ridge_beta,trace=ridge.solve(rho,design_response+precision_mean)
        sigma_beta=trace/instance.p
        denominator=1-sigma_beta*rho
        if denominator<=VAMP_DEGENERACY_TOL:
            raise NumericalDegeneracyError(f"vamp: 1 - sigma_beta*rho = {denominator!r} at iteration {iteration}")
        denoiser_input=(ridge_beta-sigma_beta*precision_mean)/denominator
        theta=lam*sigma_beta/denominator
        prox_input=make_prox_input(denoiser_input,theta,gamma,partition)
        estimate_next=prox_sgl(prox_input)
        onsager=float(np.clip(prox_onsager(prox_input),VAMP_ONSAGER_MIN,VAMP_ONSAGER_MAX))
        sigma_z=onsager*sigma_beta/denominator
        precision_mean_next=precision_mean+keep*(estimate_next/sigma_z-ridge_beta/sigma_beta)
        rho_next=rho+keep*(1/sigma_z-1/sigma_beta)
        recorder.stop()
        if is_diverged(estimate_next) or is_diverged(precision_mean_next) or not np.isfinite(rho_next):
            diagnostic=divergence_message(iteration)
            iteration-=1
            break
        change=max(relative_change(estimate_next,estimate),relative_change(precision_mean_next,precision_mean),
                   abs(rho_next-rho)/max(1.0,abs(rho)))
        estimate,precision_mean,rho=estimate_next,precision_mean_next,rho_next
        recorder.thresholds.append(theta)
        recorder.record(iteration,estimate)
        if change<config.tol or recorder.target_reached(config.stop_mse):
            converged=True
            break
    return recorder.finish(VAMP,estimate,converged,iteration,diagnostic=diagnostic)
