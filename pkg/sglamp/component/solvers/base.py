import time
import numpy as np
import pandas as pd
from sglamp.constant import *
from sglamp.component.model import ProblemInstance,cost,penalty
from sglamp.component.prox import soft_threshold
from sglamp.entity.artifact_entity import TraceRecord,SolverTrace
from sglamp.exception import ConfigurationError,DimensionError
from sglamp.logger import logging


def estimate_step_size(design:np.ndarray,rule:str=SPECTRAL_STEP)->float:
    """
    spectral: 0.95/||X||_2^2 with ||X||_2^2 from power iteration on X^T X (fixed start, fixed count).
    frobenius: 1/||X||_F^2, which never exceeds 1/||X||_2^2.
    gram_frobenius: 0.5/||X^T X||_F, strictly inside the s <= 1/||X^T X||_F bound. Much smaller than the
    spectral step on wide Gaussian designs; this is the rule the iteration-count benchmark runs at.
    """
    design=np.asarray(design,dtype=np.float64)
    if rule==FROBENIUS_STEP:
        frobenius_sq=float(np.sum(design**2))
        return 1.0/frobenius_sq if frobenius_sq>0 else 1.0
    if rule==GRAM_FROBENIUS_STEP:
        # ||X^T X||_F = ||X X^T||_F, take the smaller Gram matrix
        gram=design@design.T if design.shape[0]<design.shape[1] else design.T@design
        gram_norm=float(np.linalg.norm(gram))
        return GRAM_STEP_FRACTION/gram_norm if gram_norm>0 else 1.0
    if rule!=SPECTRAL_STEP:
        raise ConfigurationError(f"unknown step rule [{rule}]",key=STEP_RULE_KEY)
    vector=np.random.default_rng(0).standard_normal(design.shape[1])
    vector/=np.linalg.norm(vector)
    max_eig=0.0
    for _ in range(POWER_ITERATIONS):
        image=design.T@(design@vector)
        max_eig=float(np.linalg.norm(image))
        if max_eig==0:
            return 1.0
        vector=image/max_eig
    return STEP_SAFETY_FACTOR/max_eig


def smooth_and_penalty_cost(instance:ProblemInstance,beta:np.ndarray,fit:np.ndarray)->float:
    """cost() when X beta is already known."""
    residual=instance.response-fit
    return 0.5*float(residual@residual)+penalty(beta,instance.partition,instance.lam,instance.gamma)


def relative_change(new:np.ndarray,old:np.ndarray)->float:
    return float(np.linalg.norm(new-old)/max(1.0,np.linalg.norm(old)))


def is_diverged(values:np.ndarray)->bool:
    return not np.all(np.isfinite(values)) or float(np.max(np.abs(values),initial=0.0))>DIVERGENCE_LIMIT


def subgradient_residual(instance:ProblemInstance,beta:np.ndarray,lam:float=None)->float:
    """
    Largest violation (sup norm) of the optimality conditions of the SGL cost at beta,
    with g = X^T (y - X beta):
      non-zero group, beta_j != 0 : g_j = lam(1-gamma)sqrt(p_l) beta_j/||beta_l|| + lam gamma sign(beta_j)
      non-zero group, beta_j == 0 : |g_j| <= lam gamma
      zero group                  : ||S(g_l, lam gamma)|| <= lam(1-gamma)sqrt(p_l)
    """
    beta=np.asarray(beta,dtype=np.float64).ravel()
    if beta.shape[0]!=instance.p:
        raise DimensionError(f"beta has length {beta.shape[0]}, expected {instance.p}")
    lam=instance.lam if lam is None else lam
    gamma=instance.gamma
    partition=instance.partition
    gradient=instance.design.T@(instance.response-instance.design@beta)
    norms=partition.group_norms(beta)
    live_group=norms>0
    safe_norms=np.where(live_group,norms,1.0)
    group_weight=lam*(1-gamma)*partition.weights/safe_norms
    nonzero=beta!=0
    violations=np.where(nonzero,
                        np.abs(gradient-partition.expand(group_weight)*beta-lam*gamma*np.sign(beta)),
                        np.maximum(np.abs(gradient)-lam*gamma,0.0))
    violations=np.where(partition.expand(live_group),violations,0.0)
    dead_norms=partition.group_norms(soft_threshold(gradient,lam*gamma))
    dead_violations=np.where(live_group,0.0,np.maximum(dead_norms-lam*(1-gamma)*partition.weights,0.0))
    return float(max(np.max(violations,initial=0.0),np.max(dead_violations,initial=0.0)))


class TraceRecorder:
    """
    Collects per-iteration records. Only the time between start() and stop() counts towards
    elapsed_ns, so cost and opt_mse bookkeeping is not charged to the solver.
    """

    def __init__(self,instance:ProblemInstance,reference:np.ndarray=None):
        self.instance=instance
        if reference is None and instance.truth is not None:
            reference=instance.truth.beta0
        self.reference=None if reference is None else np.asarray(reference,dtype=np.float64).ravel()
        if self.reference is not None and self.reference.shape[0]!=instance.p:
            raise DimensionError(f"reference has length {self.reference.shape[0]}, expected {instance.p}")
        self.records=[]
        self.thresholds=[]
        self.elapsed_ns=0
        self._started=None

    def start(self):
        self._started=time.perf_counter_ns()

    def stop(self):
        self.elapsed_ns+=time.perf_counter_ns()-self._started
        self._started=None

    def record(self,iteration:int,beta:np.ndarray,cost_value:float=None)->TraceRecord:
        if cost_value is None:
            cost_value=cost(self.instance,beta)
        opt_mse=None
        if self.reference is not None:
            opt_mse=float(np.sum((beta-self.reference)**2)/self.instance.p)
        record=TraceRecord(iter=int(iteration),cost=float(cost_value),opt_mse=opt_mse,elapsed_ns=int(self.elapsed_ns))
        self.records.append(record)
        return record

    def target_reached(self,stop_mse:float=None)->bool:
        if stop_mse is None or not self.records or self.records[-1].opt_mse is None:
            return False
        return self.records[-1].opt_mse<=stop_mse

    def finish(self,solver:str,beta:np.ndarray,converged:bool,iters_used:int,final_residual:np.ndarray=None,
               diagnostic:str="")->SolverTrace:
        if not diagnostic:
            diagnostic="converged" if converged else "max_iters reached"
        logging.info(f"{solver} stopped after {iters_used} iterations: {diagnostic}")
        return SolverTrace(solver=solver,records=tuple(self.records),final_beta=np.array(beta,dtype=np.float64),
                           converged=bool(converged),iters_used=int(iters_used),thresholds=tuple(self.thresholds),
                           final_residual=final_residual,diagnostic=diagnostic)


def divergence_message(iteration:int)->str:
    return f"{DIVERGED_DIAGNOSTIC} at iteration {iteration}"


def trace_diverged(trace:SolverTrace)->bool:
    return trace.diagnostic.startswith(DIVERGED_DIAGNOSTIC)


def trace_frame(trace:SolverTrace)->pd.DataFrame:
    frame=pd.DataFrame([record._asdict() for record in trace.records],columns=TRACE_COLUMNS)
    frame['opt_mse']=frame['opt_mse'].astype(float)
    return frame
