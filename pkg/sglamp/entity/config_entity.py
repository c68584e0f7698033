from collections import namedtuple
import numpy as np
from scipy.stats import norm
from sglamp.constant import *
from sglamp.exception import ConfigurationError


DesignSpec=namedtuple("DesignSpec",["kind","n","p","condition_number"],defaults=[1.0])


class PriorSpec(namedtuple("PriorSpec",["kind","epsilon","value","sd","noise_sd"],
                           defaults=[0.0,1.0,1.0,0.0])):
    """
    Law of the signal entries (point-mass mixture, Bernoulli-Gaussian or zero)
    together with the noise standard deviation sigma_w.
    """
    __slots__=()

    def nonzero_probability(self)->float:
        if self.kind==ZERO_SIGNAL:
            return 0.0
        if self.kind==POINT_MASS and self.value==0:
            return 0.0
        if self.kind==BERNOULLI_GAUSSIAN and self.sd==0:
            return 0.0
        return float(self.epsilon)

    def second_moment(self)->float:
        if self.kind==POINT_MASS:
            return float(self.epsilon*self.value**2)
        if self.kind==BERNOULLI_GAUSSIAN:
            return float(self.epsilon*self.sd**2)
        return 0.0

    def nonzero_part(self)->"PriorSpec":
        """The conditional law of a signal entry given that it is non-zero."""
        if self.nonzero_probability()==0:
            raise ConfigurationError(f"prior {self} has no non-zero part",key=PRIOR_KIND_KEY)
        return self._replace(epsilon=1.0)

    def sample(self,size,rng:np.random.Generator)->np.ndarray:
        if self.kind==ZERO_SIGNAL:
            return np.zeros(size)
        active=rng.random(size)<self.epsilon
        if self.kind==POINT_MASS:
            return np.where(active,float(self.value),0.0)
        return np.where(active,rng.standard_normal(size)*self.sd,0.0)

    def sample_noise(self,size,rng:np.random.Generator)->np.ndarray:
        if self.noise_sd==0:
            return np.zeros(size)
        return rng.standard_normal(size)*self.noise_sd

    def tail_probability(self,threshold:float,tau:float)->float:
        """P(|P* + tau Z| > threshold) for P* the non-zero part of the prior."""
        if self.nonzero_probability()==0:
            return 0.0
        if self.kind==POINT_MASS:
            magnitude=abs(float(self.value))
            if tau==0:
                return float(magnitude>threshold)
            return float(norm.cdf((magnitude-threshold)/tau)+norm.cdf((-magnitude-threshold)/tau))
        scale=float(np.sqrt(self.sd**2+tau**2))
        return float(2*norm.cdf(-threshold/scale))


def make_prior_spec(kind:str,epsilon:float=0.0,value:float=1.0,sd:float=1.0,noise_sd:float=0.0)->PriorSpec:
    if kind not in PRIOR_KINDS:
        raise ConfigurationError(f"unknown prior kind [{kind}], expected one of {PRIOR_KINDS}",key=PRIOR_KIND_KEY)
    if not 0<=epsilon<=1:
        raise ConfigurationError(f"epsilon must lie in [0,1], got {epsilon}",key=EPSILON_KEY)
    if noise_sd<0:
        raise ConfigurationError(f"noise_sd must be non-negative, got {noise_sd}",key=NOISE_SD_KEY)
    if sd<0:
        raise ConfigurationError(f"signal_sd must be non-negative, got {sd}",key=SIGNAL_SD_KEY)
    if not np.isfinite(value):
        raise ConfigurationError(f"signal_value must be finite, got {value}",key=SIGNAL_VALUE_KEY)
    if kind==ZERO_SIGNAL:
        epsilon=0.0
    return PriorSpec(kind=kind,epsilon=float(epsilon),value=float(value),sd=float(sd),noise_sd=float(noise_sd))


def make_design_spec(kind:str,n:int,p:int,condition_number:float=1.0)->DesignSpec:
    if kind not in DESIGN_KINDS:
        raise ConfigurationError(f"unknown design kind [{kind}], expected one of {DESIGN_KINDS}",key=DESIGN_KIND_KEY)
    if int(n)<1:
        raise ConfigurationError(f"n must be a positive integer, got {n}",key=N_KEY)
    if int(p)<1:
        raise ConfigurationError(f"p must be a positive integer, got {p}",key=P_KEY)
    if condition_number<1:
        raise ConfigurationError(f"condition_number must be >= 1, got {condition_number}",key=CONDITION_NUMBER_KEY)
    return DesignSpec(kind=kind,n=int(n),p=int(p),condition_number=float(condition_number))


SolverConfig=namedtuple("SolverConfig",
["max_iters","tol","threshold_policy","alpha","se_outcome","step_size","step_rule","damping","stop_mse"],
defaults=[1000,1e-8,FIXED_LAMBDA,None,None,None,SPECTRAL_STEP,0.1,None])


def make_solver_config(max_iters:int=1000,tol:float=1e-8,threshold_policy:str=FIXED_LAMBDA,alpha:float=None,
                       se_outcome=None,step_size:float=None,step_rule:str=SPECTRAL_STEP,
                       damping:float=0.1,stop_mse:float=None)->SolverConfig:
    if int(max_iters)<1:
        raise ConfigurationError(f"max_iters must be positive, got {max_iters}",key=MAX_ITERS_KEY)
    if not tol>0:
        raise ConfigurationError(f"tol must be positive, got {tol}",key=TOL_KEY)
    if threshold_policy not in THRESHOLD_POLICIES:
        raise ConfigurationError(f"unknown threshold_policy [{threshold_policy}]",key=THRESHOLD_POLICY_KEY)
    if threshold_policy in (EMPIRICAL_TAU,SE_DRIVEN) and alpha is None:
        raise ConfigurationError(f"threshold_policy [{threshold_policy}] needs alpha",key=ALPHA_KEY)
    if threshold_policy==SE_DRIVEN and se_outcome is None:
        raise ConfigurationError("threshold_policy [se_driven] needs a state-evolution schedule",key=THRESHOLD_POLICY_KEY)
    if step_size is not None and not step_size>0:
        raise ConfigurationError(f"step_size must be positive, got {step_size}",key=STEP_SIZE_KEY)
    if step_rule not in STEP_RULES:
        raise ConfigurationError(f"unknown step_rule [{step_rule}]",key=STEP_RULE_KEY)
    if not 0<=damping<1:
        raise ConfigurationError(f"damping must lie in [0,1), got {damping}",key=DAMPING_KEY)
    return SolverConfig(max_iters=int(max_iters),tol=float(tol),threshold_policy=threshold_policy,
                        alpha=None if alpha is None else float(alpha),se_outcome=se_outcome,
                        step_size=None if step_size is None else float(step_size),
                        step_rule=step_rule,damping=float(damping),
                        stop_mse=None if stop_mse is None else float(stop_mse))


SEParams=namedtuple("SEParams",
["gamma","delta","prior","group_ratios","mc_samples","seed","p_mc","group_priors"],
defaults=[DEFAULT_P_MC,None])


def make_se_params(gamma:float,delta:float,prior:PriorSpec,group_ratios=(1.0,),mc_samples:int=DEFAULT_MC_SAMPLES,
                   seed:int=0,p_mc:int=DEFAULT_P_MC,group_priors=None)->SEParams:
    group_ratios=tuple(float(r) for r in group_ratios)
    if not 0<=gamma<=1:
        raise ConfigurationError(f"gamma must lie in [0,1], got {gamma}",key=GAMMA_KEY)
    if not delta>0:
        raise ConfigurationError(f"delta must be positive, got {delta}",key=N_KEY)
    if len(group_ratios)==0 or any(r<=0 for r in group_ratios):
        raise ConfigurationError(f"group ratios must be positive, got {group_ratios}",key=GROUP_MODE_KEY)
    if abs(sum(group_ratios)-1)>1e-12:
        raise ConfigurationError(f"group ratios must sum to 1, got {sum(group_ratios)}",key=GROUP_MODE_KEY)
    if int(mc_samples)<int(p_mc):
        raise ConfigurationError(f"mc_samples ({mc_samples}) must be at least p_mc ({p_mc})",key=MC_SAMPLES_KEY)
    if group_priors is not None:
        group_priors=tuple(group_priors)
        if len(group_priors)!=len(group_ratios):
            raise ConfigurationError("one prior per group is required",key=GROUP_MODE_KEY)
    return SEParams(gamma=float(gamma),delta=float(delta),prior=prior,group_ratios=group_ratios,
                    mc_samples=int(mc_samples),seed=int(seed),p_mc=int(p_mc),group_priors=group_priors)


InstanceSpec=namedtuple("InstanceSpec",
["design","prior","partition","lam","gamma","group_mode","seed"])
