import sys
from collections import namedtuple
from functools import lru_cache
import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.stats import norm
from sglamp.constant import *
from sglamp.component.model import GroupPartition,make_partition
from sglamp.component.prox import make_prox_input,prox_sgl,prox_sgl_jacobian_diag
from sglamp.entity.config_entity import SEParams
from sglamp.entity.artifact_entity import SEOutcome,MCEstimate,AdmissibleInterval,SelectionRates
from sglamp.exception import SglException,ConfigurationError,CalibrationRangeError,StateEvolutionError
from sglamp.logger import logging
from sglamp.util import write_key_value_file,write_csv


MonteCarloDraws=namedtuple("MonteCarloDraws",["signal","gaussian","partition"])


def t_func(z):
    """T(z) = (1+z^2) Phi(-z) - z phi(z) = E[max(Z - z, 0)^2]"""
    z=np.asarray(z,dtype=np.float64)
    value=(1+z**2)*norm.sf(z)-z*norm.pdf(z)
    value=np.maximum(value,0.0)
    return float(value) if value.ndim==0 else value


def _boundary(alpha:float,gamma:float)->float:
    """sqrt(2 T(gamma alpha)) - (1-gamma) alpha, strictly decreasing in alpha."""
    return float(np.sqrt(2*t_func(gamma*alpha))-(1-gamma)*alpha)


def _solve_boundary(level:float,gamma:float)->float:
    """The alpha >= 0 at which the boundary function equals level (level < 1)."""
    gap=lambda alpha:_boundary(alpha,gamma)-level
    high=1.0
    while gap(high)>0:
        high*=2
        if high>1e12:
            raise StateEvolutionError(f"no alpha reaches boundary level {level} for gamma={gamma}")
    return float(brentq(gap,0.0,high,xtol=1e-14))


def admissible_interval(gamma:float,delta:float)->AdmissibleInterval:
    """
    Alphas with delta >= (sqrt(2T(gamma alpha)) - (1-gamma) alpha)^2. The boundary function starts
    at 1 for alpha=0 and decreases, so the set is [alpha_min, alpha_max] with alpha_min=0 when delta>=1
    and alpha_max=inf when gamma=1.
    """
    if not delta>0:
        raise ConfigurationError(f"delta must be positive, got {delta}",key=N_KEY)
    if not 0<=gamma<=1:
        raise ConfigurationError(f"gamma must lie in [0,1], got {gamma}",key=GAMMA_KEY)
    root_delta=float(np.sqrt(delta))
    alpha_min=0.0 if root_delta>=1 else _solve_boundary(root_delta,gamma)
    alpha_max=np.inf if gamma==1 else _solve_boundary(-root_delta,gamma)
    assert alpha_min<=alpha_max
    return AdmissibleInterval(alpha_min=alpha_min,alpha_max=float(alpha_max))


def mc_group_sizes(group_ratios,p_mc:int)->np.ndarray:
    sizes=np.floor(np.asarray(group_ratios)*p_mc).astype(np.int64)
    sizes[0]+=p_mc-int(sizes.sum())
    if np.any(sizes<1):
        raise ConfigurationError(f"p_mc={p_mc} leaves an empty group for ratios {group_ratios}",key=P_MC_KEY)
    return sizes


@lru_cache(maxsize=32)
def monte_carlo_draws(params:SEParams)->MonteCarloDraws:
    """
    (mc_samples // p_mc) replicate vectors of length p_mc holding (Pi, Z), fixed by params.seed and
    shared by every evaluation with the same params.
    """
    sizes=mc_group_sizes(params.group_ratios,params.p_mc)
    partition=make_partition(np.repeat(np.arange(1,sizes.size+1),sizes))
    replicates=params.mc_samples//params.p_mc
    rng=np.random.default_rng(params.seed)
    priors=params.group_priors if params.group_priors is not None else (params.prior,)*sizes.size
    signal=np.empty((replicates,params.p_mc))
    for group,prior in enumerate(priors,start=1):
        block=partition.indices(group)
        signal[:,block]=prior.sample((replicates,block.size),rng)
    gaussian=rng.standard_normal((replicates,params.p_mc))
    signal.flags.writeable=False
    gaussian.flags.writeable=False
    return MonteCarloDraws(signal=signal,gaussian=gaussian,partition=partition)


def _prox_input(draws:MonteCarloDraws,tau:float,alpha:float,gamma:float):
    return make_prox_input(draws.signal+tau*draws.gaussian,alpha*tau,gamma,draws.partition)


def _mean_with_stderr(per_replicate:np.ndarray)->MCEstimate:
    value=float(np.mean(per_replicate))
    stderr=float(np.std(per_replicate,ddof=1)/np.sqrt(per_replicate.size)) if per_replicate.size>1 else 0.0
    return MCEstimate(value=value,stderr=stderr)


def se_map_estimate(tau_sq:float,alpha:float,params:SEParams)->MCEstimate:
    """F(tau^2) = sigma_w^2 + E||eta(Pi + tau Z, alpha tau) - Pi||^2/(delta p), with its Monte Carlo stderr."""
    if tau_sq<0 or alpha<0:
        raise ConfigurationError(f"se_map needs tau_sq >= 0 and alpha >= 0, got {tau_sq}, {alpha}",key=ALPHA_KEY)
    draws=monte_carlo_draws(params)
    estimate=prox_sgl(_prox_input(draws,float(np.sqrt(tau_sq)),alpha,params.gamma))
    error=np.mean((estimate-draws.signal)**2,axis=1)/params.delta
    mean=_mean_with_stderr(error)
    return MCEstimate(value=params.prior.noise_sd**2+mean.value,stderr=mean.stderr)


def se_map(tau_sq:float,alpha:float,params:SEParams)->float:
    return se_map_estimate(tau_sq,alpha,params).value


def signal_second_moment(params:SEParams)->float:
    if params.group_priors is None:
        return params.prior.second_moment()
    return float(sum(ratio*prior.second_moment() for ratio,prior in zip(params.group_ratios,params.group_priors)))


def signal_nonzero_probability(params:SEParams)->float:
    if params.group_priors is None:
        return params.prior.nonzero_probability()
    return float(sum(ratio*prior.nonzero_probability() for ratio,prior in zip(params.group_ratios,params.group_priors)))


def _check_alpha(alpha:float,params:SEParams):
    interval=admissible_interval(params.gamma,params.delta)
    if alpha<interval.alpha_min-1e-12:
        raise CalibrationRangeError(f"alpha={alpha} lies below the admissible minimum {interval.alpha_min}")
    if alpha>interval.alpha_max:
        logging.warning(f"alpha={alpha} lies above the admissible maximum {interval.alpha_max}; "
                        f"state evolution still runs but uniqueness is not guaranteed")
    return interval


@lru_cache(maxsize=512)
def _fixed_point(alpha:float,params:SEParams)->SEOutcome:
    sigma_sq=params.prior.noise_sd**2
    tau_sq=sigma_sq+signal_second_moment(params)/params.delta
    schedule=[tau_sq]
    sign_flips=0
    last_step=0.0
    converged=False
    for _ in range(SE_MAX_ITERS):
        tau_sq_next=se_map(tau_sq,alpha,params)
        step=tau_sq_next-tau_sq
        if last_step*step<0:
            sign_flips+=1
            if sign_flips>=20:
                raise StateEvolutionError(f"state evolution oscillates at alpha={alpha} around tau^2={tau_sq}; "
                                          f"increase mc_samples (now {params.mc_samples})")
        last_step=step
        schedule.append(tau_sq_next)
        if abs(step)<SE_TOL*max(1.0,tau_sq):
            tau_sq=tau_sq_next
            converged=True
            break
        tau_sq=tau_sq_next
    if not converged:
        logging.warning(f"state evolution at alpha={alpha} stopped after {SE_MAX_ITERS} iterations, tau^2={tau_sq}")
    logging.info(f"state evolution alpha={alpha}: tau*^2={tau_sq} after {len(schedule)-1} iterations")
    return SEOutcome(alpha=float(alpha),tau_star=float(np.sqrt(tau_sq)),
                     predicted_mse=float(params.delta*max(tau_sq-sigma_sq,0.0)),
                     tau_schedule=tuple(float(np.sqrt(value)) for value in schedule),converged=converged)


def se_fixed_point(alpha:float,params:SEParams)->SEOutcome:
    """Iterates tau^2 <- F(tau^2) from sigma_w^2 + E[Pi^2]/delta. Fills alpha, tau_star, predicted_mse, tau_schedule."""
    _check_alpha(alpha,params)
    return _fixed_point(float(alpha),params)


def onsager_average(alpha:float,tau:float,params:SEParams)->float:
    draws=monte_carlo_draws(params)
    return float(np.mean(prox_sgl_jacobian_diag(_prox_input(draws,tau,alpha,params.gamma))))


def lambda_of_alpha(alpha:float,params:SEParams)->float:
    """lambda = alpha tau* (1 - <eta'(Pi + tau* Z, alpha tau*)>/delta)"""
    if alpha==0:
        return 0.0
    tau_star=se_fixed_point(alpha,params).tau_star
    if tau_star==0:
        return 0.0
    return float(alpha*tau_star*(1-onsager_average(alpha,tau_star,params)/params.delta))


def lambda_max(params:SEParams)->float:
    if params.gamma==1:
        return np.inf
    interval=admissible_interval(params.gamma,params.delta)
    return lambda_of_alpha(interval.alpha_max*(1-ALPHA_MAX_MARGIN),params)


def alpha_of_lambda(lam:float,params:SEParams)->float:
    """
    Bisection on the non-decreasing map alpha -> lambda over the admissible interval. For delta < 1
    lambda runs down to -inf as alpha approaches alpha_min, so negative targets are reachable there;
    for delta >= 1 the map starts at lambda(0) = 0.
    """
    interval=admissible_interval(params.gamma,params.delta)
    alpha_min=interval.alpha_min
    if signal_second_moment(params)==0 and params.prior.noise_sd==0:
        # tau* = 0 for every alpha, so lambda vanishes identically
        if lam==0:
            return alpha_min
        raise CalibrationRangeError(f"lambda={lam} is unreachable: lambda(alpha) = 0 for a null noiseless problem",
                                    lambda_max=0.0)
    limit=lambda_max(params)
    if lam>=limit:
        raise CalibrationRangeError(f"lambda={lam} is not below lambda_max={limit}",lambda_max=limit)
    if lam<0 and alpha_min==0:
        raise CalibrationRangeError(f"lambda={lam} is negative but delta={params.delta} >= 1 keeps lambda(alpha) >= 0",
                                    lambda_max=limit)
    if np.isfinite(interval.alpha_max):
        high=interval.alpha_max*(1-ALPHA_MAX_MARGIN)
    else:
        high=max(2*alpha_min,1.0)
        while lambda_of_alpha(high,params)<=lam:
            high*=2
    low=alpha_min+(high-alpha_min)/2
    while lambda_of_alpha(low,params)>=lam:
        high=low
        if low-alpha_min<=ALPHA_TOL:
            logging.info(f"lambda={lam} lies below lambda(alpha) near alpha_min={alpha_min}; returning the edge")
            return alpha_min
        low=alpha_min+(low-alpha_min)/2
    while high-low>ALPHA_TOL:
        middle=(low+high)/2
        if lambda_of_alpha(middle,params)<lam:
            low=middle
        else:
            high=middle
    alpha=(low+high)/2
    logging.info(f"calibrated lambda={lam} to alpha={alpha}")
    return alpha


def _nonzero_tail(threshold:float,tau:float,params:SEParams)->float:
    """P(|Pi* + tau Z| > threshold) over the non-zero part of the (possibly per-group) prior."""
    if params.group_priors is None:
        return params.prior.tail_probability(threshold,tau)
    weights=[ratio*prior.nonzero_probability() for ratio,prior in zip(params.group_ratios,params.group_priors)]
    total=sum(weights)
    if total==0:
        return 0.0
    return float(sum(weight*prior.tail_probability(threshold,tau)
                     for weight,prior in zip(weights,params.group_priors) if weight>0)/total)


def selection_rates(alpha:float,tau:float,params:SEParams,rule:str="prox")->SelectionRates:
    """
    Monte Carlo TPP/FDP of the scalar channel Pi + tau Z. rule="soft" selects |Pi + tau Z| > gamma alpha tau,
    rule="prox" selects the non-zeros of the full SGL prox (group kills included).
    """
    draws=monte_carlo_draws(params)
    point=draws.signal+tau*draws.gaussian
    if rule=="soft":
        selected=np.abs(point)>params.gamma*alpha*tau
    elif rule=="prox":
        selected=np.abs(prox_sgl(make_prox_input(point,alpha*tau,params.gamma,draws.partition)))>ZERO_TOL
    else:
        raise ConfigurationError(f"unknown selection rule [{rule}]",key=rule)
    signal=draws.signal!=0
    true_counts=np.sum(selected&signal,axis=1)
    support_counts=np.sum(signal,axis=1)
    selected_counts=np.sum(selected,axis=1)
    tpp=np.divide(true_counts,support_counts,out=np.zeros(true_counts.shape),where=support_counts>0)
    fdp=np.divide(selected_counts-true_counts,selected_counts,out=np.zeros(true_counts.shape),where=selected_counts>0)
    tpp_estimate=_mean_with_stderr(tpp)
    fdp_estimate=_mean_with_stderr(fdp)
    return SelectionRates(tpp=tpp_estimate.value,fdp=fdp_estimate.value,
                          tpp_stderr=tpp_estimate.stderr,fdp_stderr=fdp_estimate.stderr)


def predict_metrics(alpha:float,params:SEParams)->SEOutcome:
    """
    All predictions at alpha: tau*, the calibrated lambda, MSE = delta(tau*^2 - sigma_w^2),
    TPP = P(|Pi* + tau* Z| > gamma alpha tau*) and
    FDP = 2(1-q)Phi(-gamma alpha) / (2(1-q)Phi(-gamma alpha) + q TPP) with q = P(Pi != 0),
    plus the Monte Carlo selection rates of the full prox.
    """
    outcome=se_fixed_point(alpha,params)
    tau=outcome.tau_star
    threshold=params.gamma*alpha*tau
    nonzero_probability=signal_nonzero_probability(params)
    null_selection=2*norm.cdf(-params.gamma*alpha) if tau>0 else 0.0
    if nonzero_probability==0:
        tpp=0.0
        fdp=1.0 if null_selection>0 else 0.0
    else:
        tpp=_nonzero_tail(threshold,tau,params)
        false_mass=(1-nonzero_probability)*null_selection
        total=false_mass+nonzero_probability*tpp
        fdp=false_mass/total if total>0 else 0.0
    prox_rates=selection_rates(alpha,tau,params,rule="prox")
    return outcome._replace(lam=lambda_of_alpha(alpha,params),tpp_inf=float(tpp),fdp_inf=float(fdp),
                            tpp_prox_mc=prox_rates.tpp,fdp_prox_mc=prox_rates.fdp)


def fixed_point_slope(alpha:float,params:SEParams)->float:
    """dF/dtau^2 at tau*^2 by symmetric difference (one-sided at tau* = 0)."""
    tau_sq=se_fixed_point(alpha,params).tau_star**2
    step=max(1e-3*tau_sq,1e-6)
    if tau_sq-step<0:
        return (se_map(tau_sq+step,alpha,params)-se_map(tau_sq,alpha,params))/step
    return (se_map(tau_sq+step,alpha,params)-se_map(tau_sq-step,alpha,params))/(2*step)


def write_se_outcome(outcome:SEOutcome,outcome_file_path:str,schedule_file_path:str):
    try:
        write_key_value_file(outcome_file_path,{
            'alpha':outcome.alpha,
            'tau_star':outcome.tau_star,
            'lambda':outcome.lam,
            'predicted_mse':outcome.predicted_mse,
            'tpp_inf':outcome.tpp_inf,
            'fdp_inf':outcome.fdp_inf,
            'tpp_prox_mc':outcome.tpp_prox_mc,
            'fdp_prox_mc':outcome.fdp_prox_mc,
            'converged':outcome.converged,
        })
        schedule=pd.DataFrame({'iter':np.arange(len(outcome.tau_schedule)),'tau':list(outcome.tau_schedule)})
        write_csv(schedule_file_path,schedule)
    except SglException:
        raise
    except Exception as e:
        raise SglException(e,sys) from e
