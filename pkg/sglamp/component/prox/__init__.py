from collections import namedtuple
import numpy as np
from sglamp.constant import *
from sglamp.exception import ConfigurationError,DimensionError
from sglamp.component.model import GroupPartition


ProxInput=namedtuple("ProxInput",["point","threshold","gamma","partition"])


def make_prox_input(point,threshold:float,gamma:float,partition:GroupPartition)->ProxInput:
    point=np.asarray(point,dtype=np.float64)
    if point.shape[-1]!=partition.p:
        raise DimensionError(f"point has length {point.shape[-1]}, partition covers {partition.p}")
    if not threshold>=0:
        raise ConfigurationError(f"threshold must be non-negative, got {threshold}",key=LAMBDA_KEY)
    if not 0<=gamma<=1:
        raise ConfigurationError(f"gamma must lie in [0,1], got {gamma}",key=GAMMA_KEY)
    return ProxInput(point=point,threshold=float(threshold),gamma=float(gamma),partition=partition)


def soft_threshold(x,b):
    if np.any(np.asarray(b)<0):
        raise ConfigurationError(f"soft-threshold level must be non-negative, got {b}",key=LAMBDA_KEY)
    return np.sign(x)*np.maximum(np.abs(x)-b,0)


def _group_shrink(prox_input:ProxInput):
    """Returns (u, group norms of u, group thresholds, surviving-group mask)."""
    partition=prox_input.partition
    u=soft_threshold(prox_input.point,prox_input.gamma*prox_input.threshold)
    norms=partition.group_norms(u)
    shrink=(1-prox_input.gamma)*prox_input.threshold*partition.weights
    # ties go to the zero group
    survive=norms>shrink
    return u,norms,shrink,survive


def prox_sgl(prox_input:ProxInput)->np.ndarray:
    """
    Proximal map of the Sparse Group LASSO penalty at level theta:
    entrywise soft-threshold at gamma*theta followed by group shrinkage at (1-gamma)*theta*sqrt(p_l).
    Leading axes of point are treated as independent batches.
    """
    partition=prox_input.partition
    u,norms,shrink,survive=_group_shrink(prox_input)
    ratio=np.divide(shrink,norms,out=np.zeros(norms.shape),where=norms>0)
    factor=np.where(survive,1-ratio,0.0)
    return u*partition.expand(factor)


def prox_sgl_jacobian_diag(prox_input:ProxInput)->np.ndarray:
    """Diagonal of the Jacobian of prox_sgl; zero on killed groups and at |s_j| <= gamma*theta."""
    if prox_input.threshold==0:
        return np.ones(np.shape(prox_input.point))
    partition=prox_input.partition
    u,norms,shrink,survive=_group_shrink(prox_input)
    ratio=np.divide(shrink,norms,out=np.zeros(norms.shape),where=norms>0)
    inverse_sq=np.divide(1.0,np.square(norms),out=np.zeros(norms.shape),where=norms>0)
    active=np.abs(prox_input.point)>prox_input.gamma*prox_input.threshold
    diag=1-partition.expand(ratio)*(1-np.square(u)*partition.expand(inverse_sq))
    return np.where(active&partition.expand(survive),diag,0.0)


def prox_onsager(prox_input:ProxInput)->float:
    """Average of the Jacobian diagonal over the last axis (and any batch axes)."""
    return float(np.mean(prox_sgl_jacobian_diag(prox_input)))


def prox_single_group(values:np.ndarray,threshold:float,gamma:float,weight:float)->np.ndarray:
    """prox_sgl restricted to one group of the given weight."""
    u=soft_threshold(values,gamma*threshold)
    norm=float(np.linalg.norm(u))
    shrink=(1-gamma)*threshold*weight
    if norm<=shrink:
        return np.zeros_like(u)
    return (1-shrink/norm)*u
