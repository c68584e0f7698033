import os,sys
from collections import namedtuple
import numpy as np
import scipy.linalg
from sklearn.utils import check_array,check_consistent_length
from sglamp.constant import *
from sglamp.entity.config_entity import DesignSpec,PriorSpec
from sglamp.exception import SglException,ConfigurationError,DimensionError
from sglamp.logger import logging
from sglamp.util import (save_matrix,load_matrix,save_vector,load_vector,save_membership,load_membership,
                         read_key_value_file,write_key_value_file)


class GroupPartition(namedtuple("GroupPartition",["membership","sizes","weights","labels","order","starts"])):
    """
    Group membership of the p coordinates.

    membership holds ids 1..L; labels[l-1] is the id the caller originally used for group l.
    order/starts lay the coordinates out group by group so that per-group reductions are a
    single np.add.reduceat call.
    """
    __slots__=()

    @property
    def p(self)->int:
        return int(self.membership.shape[0])

    @property
    def n_groups(self)->int:
        return int(self.sizes.shape[0])

    def group_sum(self,values:np.ndarray)->np.ndarray:
        """Sums the last axis of values within each group; returns shape (..., L)."""
        values=np.asarray(values,dtype=np.float64)
        return np.add.reduceat(values[...,self.order],self.starts,axis=-1)

    def group_norms(self,values:np.ndarray)->np.ndarray:
        return np.sqrt(self.group_sum(np.square(values)))

    def expand(self,group_values:np.ndarray)->np.ndarray:
        """Broadcasts per-group values (..., L) back to per-coordinate values (..., p)."""
        return np.asarray(group_values)[...,self.membership-1]

    def indices(self,group:int)->np.ndarray:
        """Coordinates of group `group` (1-based), ascending."""
        start=self.starts[group-1]
        return self.order[start:start+self.sizes[group-1]]

    def original_membership(self)->np.ndarray:
        return self.labels[self.membership-1]


def make_partition(membership)->GroupPartition:
    membership=np.asarray(membership).ravel()
    if membership.size==0:
        raise DimensionError("group membership vector is empty")
    if not np.all(np.isfinite(membership)) or not np.all(membership==np.round(membership)):
        raise ConfigurationError("group ids must be integers",key=GROUPS_KEY)
    labels,inverse=np.unique(membership.astype(np.int64),return_inverse=True)
    sizes=np.bincount(inverse.ravel(),minlength=labels.size)
    assert np.all(sizes>=1)
    order=np.argsort(inverse.ravel(),kind='stable')
    starts=np.concatenate(([0],np.cumsum(sizes)[:-1]))
    return GroupPartition(membership=inverse.ravel().astype(np.int64)+1,
                          sizes=sizes.astype(np.int64),
                          weights=np.sqrt(sizes.astype(np.float64)),
                          labels=labels,
                          order=order,
                          starts=starts.astype(np.int64))


def perfect_partition(p:int,epsilon:float)->GroupPartition:
    """Two groups: the first floor(epsilon*p) coordinates, then the rest."""
    support=int(np.floor(epsilon*p))
    if support<1 or support>=p:
        raise ConfigurationError(f"perfect groups need 0 < floor(epsilon*p) < p, got {support} for p={p}",
                                 key=EPSILON_KEY)
    return make_partition(np.concatenate((np.ones(support,dtype=np.int64),np.full(p-support,2,dtype=np.int64))))


def mixed_partition(p:int)->GroupPartition:
    return make_partition(np.ones(p,dtype=np.int64))


Truth=namedtuple("Truth",["beta0","noise"])


class ProblemInstance(namedtuple("ProblemInstance",
                      ["design","response","partition","lam","gamma","truth","sigma_w","seed"],
                      defaults=[None,0.0,None])):
    __slots__=()

    @property
    def n(self)->int:
        return int(self.design.shape[0])

    @property
    def p(self)->int:
        return int(self.design.shape[1])

    @property
    def delta(self)->float:
        return self.n/self.p

    def with_lambda(self,lam:float)->"ProblemInstance":
        if lam<0:
            raise ConfigurationError(f"lambda must be non-negative, got {lam}",key=LAMBDA_KEY)
        return self._replace(lam=float(lam))


def make_problem_instance(design,response,partition:GroupPartition,lam:float,gamma:float,
                          truth:Truth=None,sigma_w:float=0.0,seed:int=None)->ProblemInstance:
    design=check_array(design,dtype=np.float64)
    response=np.asarray(response,dtype=np.float64).ravel()
    try:
        check_consistent_length(design,response)
    except ValueError as e:
        raise DimensionError(e) from e
    if partition.p!=design.shape[1]:
        raise DimensionError(f"partition covers {partition.p} coordinates but the design has {design.shape[1]} columns")
    if not lam>=0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}",key=LAMBDA_KEY)
    if not 0<=gamma<=1:
        raise ConfigurationError(f"gamma must lie in [0,1], got {gamma}",key=GAMMA_KEY)
    if truth is not None:
        beta0=np.asarray(truth.beta0,dtype=np.float64).ravel()
        noise=np.asarray(truth.noise,dtype=np.float64).ravel()
        if beta0.shape[0]!=design.shape[1] or noise.shape[0]!=design.shape[0]:
            raise DimensionError(f"truth shapes {beta0.shape},{noise.shape} do not match design {design.shape}")
        truth=Truth(beta0=beta0,noise=noise)
    return ProblemInstance(design=design,response=response,partition=partition,lam=float(lam),
                           gamma=float(gamma),truth=truth,sigma_w=float(sigma_w),seed=seed)


def penalty(beta:np.ndarray,partition:GroupPartition,lam:float,gamma:float)->float:
    beta=np.asarray(beta,dtype=np.float64)
    group_term=float(np.dot(partition.weights,partition.group_norms(beta)))
    return (1-gamma)*lam*group_term+gamma*lam*float(np.abs(beta).sum())


def cost(instance:ProblemInstance,beta:np.ndarray)->float:
    """1/2 ||y - X beta||^2 + (1-gamma) lambda sum_l sqrt(p_l) ||beta_l|| + gamma lambda ||beta||_1"""
    beta=np.asarray(beta,dtype=np.float64).ravel()
    if beta.shape[0]!=instance.p:
        raise DimensionError(f"beta has length {beta.shape[0]}, expected {instance.p}")
    residual=instance.response-instance.design@beta
    return 0.5*float(residual@residual)+penalty(beta,instance.partition,instance.lam,instance.gamma)


def _haar_orthogonal(size:int,rng:np.random.Generator)->np.ndarray:
    q,r=scipy.linalg.qr(rng.standard_normal((size,size)))
    signs=np.sign(np.diag(r))
    signs[signs==0]=1
    return q*signs


def sample_design(spec:DesignSpec,rng:np.random.Generator)->np.ndarray:
    n,p=spec.n,spec.p
    scale=1/np.sqrt(n)
    if spec.kind==GAUSSIAN_IID:
        return rng.standard_normal((n,p))*scale
    if spec.kind==BERNOULLI_PM1:
        return (2.0*rng.integers(0,2,size=(n,p))-1)*scale
    if spec.kind==SHIFTED_EXPONENTIAL:
        # inverse CDF of the unit exponential, shifted to mean zero
        return (-np.log1p(-rng.random((n,p)))-1)*scale
    if spec.kind==ROT_INVARIANT:
        rank=min(n,p)
        left=_haar_orthogonal(n,rng)[:,:rank]
        right=_haar_orthogonal(p,rng)[:,:rank]
        singular=np.sort(np.exp(rng.uniform(0,np.log(spec.condition_number),size=rank)))[::-1]
        singular[0]=spec.condition_number
        singular[-1]=1.0
        design=(left*singular)@right.T
        return design*np.sqrt(p/np.sum(singular**2))
    raise ConfigurationError(f"unknown design kind [{spec.kind}]",key=DESIGN_KIND_KEY)


def generate_instance(design:DesignSpec,prior:PriorSpec,partition:GroupPartition,lam:float,gamma:float,
                      group_mode:str,seed:int)->ProblemInstance:
    """
    Draws X, beta0 and w from the given laws and returns y = X beta0 + w.

    In perfect mode group 1 holds i.i.d. draws of the non-zero part of the prior and group 2 is
    null, so the support is exactly group 1. In mixed mode every coordinate is drawn from the prior.
    Draw order is design, signal, noise; the result is a pure function of the arguments.
    """
    if group_mode not in GROUP_MODES:
        raise ConfigurationError(f"unknown group_mode [{group_mode}]",key=GROUP_MODE_KEY)
    if partition is None:
        partition=perfect_partition(design.p,prior.epsilon) if group_mode==PERFECT_GROUPS else mixed_partition(design.p)
    if partition.p!=design.p:
        raise DimensionError(f"partition covers {partition.p} coordinates but design.p={design.p}")
    rng=np.random.default_rng(seed)
    matrix=sample_design(design,rng)
    if group_mode==PERFECT_GROUPS:
        if partition.n_groups!=2:
            raise ConfigurationError(f"perfect group mode needs exactly 2 groups, got {partition.n_groups}",
                                     key=GROUP_MODE_KEY)
        if prior.nonzero_probability()==0:
            raise ConfigurationError("perfect group mode needs a prior with non-zero signals",key=PRIOR_KIND_KEY)
        beta0=np.zeros(design.p)
        support=partition.indices(1)
        beta0[support]=prior.nonzero_part().sample(support.size,rng)
    else:
        beta0=prior.sample(design.p,rng)
    noise=prior.sample_noise(design.n,rng)
    response=matrix@beta0+noise
    logging.info(f"generated {design.kind} instance n={design.n} p={design.p} L={partition.n_groups} "
                 f"support={int(np.count_nonzero(beta0))} seed={seed}")
    return make_problem_instance(design=matrix,response=response,partition=partition,lam=lam,gamma=gamma,
                                 truth=Truth(beta0=beta0,noise=noise),sigma_w=prior.noise_sd,seed=seed)


def save_instance(instance:ProblemInstance,bundle_dir:str)->str:
    try:
        os.makedirs(bundle_dir,exist_ok=True)
        save_matrix(os.path.join(bundle_dir,BUNDLE_DESIGN_FILE_NAME),instance.design)
        save_vector(os.path.join(bundle_dir,BUNDLE_RESPONSE_FILE_NAME),instance.response)
        save_membership(os.path.join(bundle_dir,BUNDLE_GROUPS_FILE_NAME),instance.partition.original_membership())
        meta={META_LAMBDA_KEY:instance.lam,
              META_GAMMA_KEY:instance.gamma,
              META_SIGMA_W_KEY:instance.sigma_w,
              META_SEED_KEY:instance.seed,
              META_GROUPS_KEY:BUNDLE_GROUPS_FILE_NAME}
        write_key_value_file(os.path.join(bundle_dir,BUNDLE_META_FILE_NAME),meta)
        if instance.truth is not None:
            save_vector(os.path.join(bundle_dir,BUNDLE_BETA0_FILE_NAME),instance.truth.beta0)
            save_vector(os.path.join(bundle_dir,BUNDLE_NOISE_FILE_NAME),instance.truth.noise)
        logging.info(f"instance bundle written to [{bundle_dir}]")
        return bundle_dir
    except SglException:
        raise
    except Exception as e:
        raise SglException(e,sys) from e


def load_instance(bundle_dir:str)->ProblemInstance:
    meta_file_path=os.path.join(bundle_dir,BUNDLE_META_FILE_NAME)
    if not os.path.exists(meta_file_path):
        raise ConfigurationError(f"no {BUNDLE_META_FILE_NAME} in bundle [{bundle_dir}]",key=bundle_dir)
    meta=read_key_value_file(meta_file_path)
    design=load_matrix(os.path.join(bundle_dir,BUNDLE_DESIGN_FILE_NAME))
    response=load_vector(os.path.join(bundle_dir,BUNDLE_RESPONSE_FILE_NAME))
    groups=meta.get(META_GROUPS_KEY)
    if groups:
        groups_file_path=groups if os.path.isabs(groups) else os.path.join(bundle_dir,groups)
        partition=make_partition(load_membership(groups_file_path))
    else:
        partition=mixed_partition(design.shape[1])
    truth=None
    beta0_file_path=os.path.join(bundle_dir,BUNDLE_BETA0_FILE_NAME)
    noise_file_path=os.path.join(bundle_dir,BUNDLE_NOISE_FILE_NAME)
    if os.path.exists(beta0_file_path) and os.path.exists(noise_file_path):
        truth=Truth(beta0=load_vector(beta0_file_path),noise=load_vector(noise_file_path))
    seed=meta.get(META_SEED_KEY)
    return make_problem_instance(design=design,response=response,partition=partition,
                                 lam=float(meta.get(META_LAMBDA_KEY,1.0)),gamma=float(meta.get(META_GAMMA_KEY,0.5)),
                                 truth=truth,sigma_w=float(meta.get(META_SIGMA_W_KEY,0.0) or 0.0),
                                 seed=None if seed is None else int(seed))
