import numpy as np
from scipy.optimize import brentq
from sglamp.constant import *
from sglamp.component.model import ProblemInstance
from sglamp.component.prox import make_prox_input,prox_sgl,prox_onsager
from sglamp.component.solvers.base import (TraceRecorder,relative_change,is_diverged,divergence_message,
                                           smooth_and_penalty_cost)
from sglamp.entity.config_entity import SolverConfig
from sglamp.entity.artifact_entity import SolverTrace
from sglamp.exception import ConfigurationError
from sglamp.logger import logging


def effective_lambda(pseudo_data:np.ndarray,theta:float,gamma:float,partition,delta:float)->float:
    """theta (1 - <eta'(pseudo_data, theta)>/delta)"""
    onsager=prox_onsager(make_prox_input(pseudo_data,theta,gamma,partition))
    return theta*(1-onsager/delta)


def threshold_for_lambda(pseudo_data:np.ndarray,lam:float,gamma:float,partition,delta:float)->float:
    """Solves effective_lambda(theta) = lam for theta on the current pseudo-data."""
    if lam==0:
        return 0.0
    gap=lambda theta:effective_lambda(pseudo_data,theta,gamma,partition,delta)-lam
    high=max(lam,1.0)
    for _ in range(200):
        if gap(high)>0:
            break
        high*=2
    else:
        raise ConfigurationError(f"no AMP threshold matches lambda={lam}",key=LAMBDA_KEY)
    return float(brentq(gap,0.0,high,xtol=1e-12))


def _threshold(config:SolverConfig,iteration:int,residual:np.ndarray,pseudo_data:np.ndarray,
               instance:ProblemInstance)->float:
    if config.threshold_policy==EMPIRICAL_TAU:
        return config.alpha*float(np.linalg.norm(residual))/np.sqrt(instance.n)
    if config.threshold_policy==SE_DRIVEN:
        outcome=config.se_outcome
        alpha=outcome.alpha if config.alpha is None else config.alpha
        schedule=outcome.tau_schedule
        tau=schedule[iteration] if iteration<len(schedule) else outcome.tau_star
        return alpha*float(tau)
    return threshold_for_lambda(pseudo_data,instance.lam,instance.gamma,instance.partition,instance.delta)


def solve_amp(instance:ProblemInstance,config:SolverConfig,reference:np.ndarray=None)->SolverTrace:
    """
    beta^{t+1} = eta(X^T z^t + beta^t, theta_t)
    z^{t+1}    = y - X beta^{t+1} + z^t <eta'(X^T z^t + beta^t, theta_t)> / delta
    from beta^0 = 0, z^0 = y.
    """
    design,response,partition=instance.design,instance.response,instance.partition
    recorder=TraceRecorder(instance,reference)
    beta=np.zeros(instance.p)
    residual=response.copy()
    recorder.record(0,beta)
    logging.info(f"amp started: policy={config.threshold_policy} lambda={instance.lam} gamma={instance.gamma} "
                 f"n={instance.n} p={instance.p}")
    converged=False
    diagnostic=""
    iteration=0
    theta_before=None
    for iteration in range(1,config.max_iters+1):
        recorder.start()
        pseudo_data=design.T@residual+beta
        theta=_threshold(config,iteration-1,residual,pseudo_data,instance)
        prox_input=make_prox_input(pseudo_data,theta,instance.gamma,partition)
        beta_next=prox_sgl(prox_input)
        onsager=prox_onsager(prox_input)
        fit=design@beta_next
        residual_next=response-fit+residual*onsager/instance.delta
        recorder.stop()
        if is_diverged(beta_next) or is_diverged(residual_next):
            diagnostic=divergence_message(iteration)
            logging.warning(f"amp {diagnostic}")
            iteration-=1
            break
        # a killed iterate repeats beta=0, z=y while the threshold is still moving
        settled=theta_before is not None and abs(theta-theta_before)<=config.tol*max(1.0,abs(theta))
        change=max(relative_change(beta_next,beta),relative_change(residual_next,residual))
        beta,residual,theta_before=beta_next,residual_next,theta
        recorder.thresholds.append(theta)
        recorder.record(iteration,beta,smooth_and_penalty_cost(instance,beta,fit))
        if (settled and change<config.tol) or recorder.target_reached(config.stop_mse):
            converged=True
            break
    return recorder.finish(AMP,beta,converged,iteration,final_residual=residual,diagnostic=diagnostic)


def amp_calibrated_lambda(trace:SolverTrace,instance:ProblemInstance)->float:
    """The penalty level an AMP fixed point solves: theta*(1 - <eta'(X^T z + beta, theta*)>/delta)."""
    if not trace.thresholds or trace.final_residual is None:
        raise ConfigurationError("trace carries no AMP threshold or residual",key=SOLVER_KEY)
    pseudo_data=instance.design.T@trace.final_residual+trace.final_beta
    return effective_lambda(pseudo_data,trace.thresholds[-1],instance.gamma,instance.partition,instance.delta)
