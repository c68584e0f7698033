import numpy as np
from sglamp.constant import *
from sglamp.component.model import ProblemInstance
from sglamp.component.prox import make_prox_input,prox_sgl,prox_single_group,soft_threshold
from sglamp.component.solvers.base import (TraceRecorder,estimate_step_size,relative_change,is_diverged,
                                           divergence_message,smooth_and_penalty_cost)
from sglamp.entity.config_entity import SolverConfig
from sglamp.entity.artifact_entity import SolverTrace
from sglamp.exception import StepSizeError
from sglamp.logger import logging


def _check_decrease(solver:str,iteration:int,previous:float,current:float,step:float):
    if current>previous+COST_INCREASE_TOL:
        raise StepSizeError(f"{solver}: cost rose from {previous!r} to {current!r} at iteration {iteration} "
                            f"with step {step!r}; retry with step_size={step/2!r}",suggested_step=step/2)


def _step(instance:ProblemInstance,config:SolverConfig,recorder:TraceRecorder)->float:
    if config.step_size is not None:
        return config.step_size
    recorder.start()
    step=estimate_step_size(instance.design,config.step_rule)
    recorder.stop()
    return step


def solve_ista(instance:ProblemInstance,config:SolverConfig,reference:np.ndarray=None)->SolverTrace:
    """Proximal gradient descent: beta <- eta(beta + s X^T (y - X beta), s lambda)."""
    design,response,partition=instance.design,instance.response,instance.partition
    recorder=TraceRecorder(instance,reference)
    step=_step(instance,config,recorder)
    beta=np.zeros(instance.p)
    fit=np.zeros(instance.n)
    current_cost=smooth_and_penalty_cost(instance,beta,fit)
    recorder.record(0,beta,current_cost)
    logging.info(f"ista started: step={step} lambda={instance.lam} gamma={instance.gamma}")
    converged=False
    diagnostic=""
    iteration=0
    for iteration in range(1,config.max_iters+1):
        recorder.start()
        gradient_point=beta+step*(design.T@(response-fit))
        beta_next=prox_sgl(make_prox_input(gradient_point,step*instance.lam,instance.gamma,partition))
        fit_next=design@beta_next
        recorder.stop()
        if is_diverged(beta_next):
            diagnostic=divergence_message(iteration)
            iteration-=1
            break
        next_cost=smooth_and_penalty_cost(instance,beta_next,fit_next)
        _check_decrease(ISTA,iteration,current_cost,next_cost,step)
        change=relative_change(beta_next,beta)
        beta,fit,current_cost=beta_next,fit_next,next_cost
        recorder.record(iteration,beta,current_cost)
        if change<config.tol or recorder.target_reached(config.stop_mse):
            converged=True
            break
    return recorder.finish(ISTA,beta,converged,iteration,diagnostic=diagnostic)


def fista_momentum(count:int)->list:
    """d_1 = 1, d_{t+1} = (1 + sqrt(1 + 4 d_t^2))/2"""
    momentum=[1.0]
    while len(momentum)<count:
        momentum.append((1+np.sqrt(1+4*momentum[-1]**2))/2)
    return momentum[:count]


def solve_fista(instance:ProblemInstance,config:SolverConfig,reference:np.ndarray=None)->SolverTrace:
    """
    ISTA step taken at M^{t+1} = beta^t + ((d_t - 1)/d_{t+1})(beta^t - beta^{t-1}).
    Cost is not monotone here, so a too-large step is detected through the quadratic
    upper bound of the smooth part at M, which holds for every s <= 1/||X||_2^2.
    """
    design,response,partition=instance.design,instance.response,instance.partition
    recorder=TraceRecorder(instance,reference)
    step=_step(instance,config,recorder)
    beta=np.zeros(instance.p)
    beta_previous=beta.copy()
    fit=np.zeros(instance.n)
    fit_previous=fit.copy()
    recorder.record(0,beta,smooth_and_penalty_cost(instance,beta,fit))
    logging.info(f"fista started: step={step} lambda={instance.lam} gamma={instance.gamma}")
    momentum=1.0
    converged=False
    diagnostic=""
    iteration=0
    for iteration in range(1,config.max_iters+1):
        recorder.start()
        momentum_next=(1+np.sqrt(1+4*momentum**2))/2
        weight=(momentum-1)/momentum_next
        point=beta+weight*(beta-beta_previous)
        point_fit=fit+weight*(fit-fit_previous)
        point_residual=response-point_fit
        gradient=design.T@point_residual
        beta_next=prox_sgl(make_prox_input(point+step*gradient,step*instance.lam,instance.gamma,partition))
        fit_next=design@beta_next
        recorder.stop()
        if is_diverged(beta_next):
            diagnostic=divergence_message(iteration)
            iteration-=1
            break
        residual_next=response-fit_next
        smooth_next=0.5*float(residual_next@residual_next)
        smooth_point=0.5*float(point_residual@point_residual)
        move=beta_next-point
        bound=smooth_point-float(gradient@move)+float(move@move)/(2*step)
        if smooth_next>bound+COST_INCREASE_TOL*max(1.0,abs(bound)):
            raise StepSizeError(f"fista: step {step!r} violates the quadratic upper bound at iteration {iteration}; "
                                f"retry with step_size={step/2!r}",suggested_step=step/2)
        change=relative_change(beta_next,beta)
        beta_previous,fit_previous=beta,fit
        beta,fit=beta_next,fit_next
        momentum=momentum_next
        recorder.record(iteration,beta,smooth_and_penalty_cost(instance,beta,fit))
        if change<config.tol or recorder.target_reached(config.stop_mse):
            converged=True
            break
    return recorder.finish(FISTA,beta,converged,iteration,diagnostic=diagnostic)


def solve_blockwise(instance:ProblemInstance,config:SolverConfig,reference:np.ndarray=None)->SolverTrace:
    """
    Cyclic block descent over groups in ascending id. Each block first tests whether zero is
    its exact minimiser given the partial residual r_(-l); otherwise it takes one proximal
    gradient step with the block step 0.95/||X_l||_2^2.
    """
    design,response,partition=instance.design,instance.response,instance.partition
    lam,gamma=instance.lam,instance.gamma
    recorder=TraceRecorder(instance,reference)
    recorder.start()
    blocks=[partition.indices(group) for group in range(1,partition.n_groups+1)]
    columns=[design[:,block] for block in blocks]
    if config.step_size is not None:
        steps=[config.step_size]*len(blocks)
    else:
        steps=[estimate_step_size(column,config.step_rule) for column in columns]
    recorder.stop()
    beta=np.zeros(instance.p)
    fit=np.zeros(instance.n)
    current_cost=smooth_and_penalty_cost(instance,beta,fit)
    recorder.record(0,beta,current_cost)
    logging.info(f"blockwise started: L={len(blocks)} lambda={lam} gamma={gamma}")
    converged=False
    diagnostic=""
    iteration=0
    for iteration in range(1,config.max_iters+1):
        recorder.start()
        beta_before=beta.copy()
        for block,column,step,weight in zip(blocks,columns,steps,partition.weights):
            block_beta=beta[block]
            block_fit=column@block_beta
            partial_residual=response-fit+block_fit
            correlation=column.T@partial_residual
            if np.linalg.norm(soft_threshold(correlation,gamma*lam))<=(1-gamma)*lam*weight:
                block_next=np.zeros_like(block_beta)
            else:
                gradient_point=block_beta-step*(column.T@(block_fit-partial_residual))
                block_next=prox_single_group(gradient_point,step*lam,gamma,weight)
            fit=fit+column@(block_next-block_beta)
            beta[block]=block_next
        recorder.stop()
        if is_diverged(beta):
            diagnostic=divergence_message(iteration)
            beta=beta_before
            iteration-=1
            break
        fit=design@beta
        next_cost=smooth_and_penalty_cost(instance,beta,fit)
        _check_decrease(BLOCKWISE,iteration,current_cost,next_cost,max(steps))
        current_cost=next_cost
        change=relative_change(beta,beta_before)
        recorder.record(iteration,beta,current_cost)
        if change<config.tol or recorder.target_reached(config.stop_mse):
            converged=True
            break
    return recorder.finish(BLOCKWISE,beta,converged,iteration,diagnostic=diagnostic)
