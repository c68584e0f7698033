import numpy as np
import pandas as pd
from joblib import Parallel,delayed
from sglamp.constant import *
from sglamp.component.model import (ProblemInstance,generate_instance,perfect_partition,mixed_partition)
from sglamp.component.prox import make_prox_input,prox_sgl
from sglamp.component.solvers import solve_amp,solve_fista
from sglamp.component.state_evolution import (monte_carlo_draws,se_fixed_point,alpha_of_lambda,predict_metrics)
from sglamp.entity.config_entity import (InstanceSpec,SEParams,SolverConfig,make_se_params,make_prior_spec,
                                         make_solver_config)
from sglamp.entity.artifact_entity import (EmpiricalMetrics,PathRow,PathResult,QQTable,BenchRow,CharacterizeRow,
                                           GroupComparison,SolverTrace,SEOutcome)
from sglamp.entity.solver_factory import SolverFactory
from sglamp.exception import ConfigurationError,DimensionError,CalibrationRangeError,StateEvolutionError
from sglamp.logger import logging


def empirical_metrics(beta_hat:np.ndarray,beta0:np.ndarray)->EmpiricalMetrics:
    """
    mse = ||beta_hat - beta0||^2/p, tpp = |selected and true|/|true|, fdp = |selected and null|/|selected|.
    Entries with |value| <= 1e-10 count as zero. fdp is 0 without discoveries; tpp is NaN when beta0 = 0.
    """
    beta_hat=np.asarray(beta_hat,dtype=np.float64).ravel()
    beta0=np.asarray(beta0,dtype=np.float64).ravel()
    if beta_hat.shape!=beta0.shape:
        raise DimensionError(f"estimate has length {beta_hat.size}, truth has length {beta0.size}")
    selected=np.abs(beta_hat)>ZERO_TOL
    support=np.abs(beta0)>ZERO_TOL
    n_selected=int(selected.sum())
    true_discoveries=int(np.sum(selected&support))
    tpp=true_discoveries/int(support.sum()) if support.any() else np.nan
    fdp=(n_selected-true_discoveries)/n_selected if n_selected>0 else 0.0
    return EmpiricalMetrics(mse=float(np.sum((beta_hat-beta0)**2)/beta0.size),tpp=float(tpp),fdp=float(fdp),
                            n_selected=n_selected)


def instance_partition(instance_spec:InstanceSpec):
    if instance_spec.partition is not None:
        return instance_spec.partition
    if instance_spec.group_mode==PERFECT_GROUPS:
        return perfect_partition(instance_spec.design.p,instance_spec.prior.epsilon)
    return mixed_partition(instance_spec.design.p)


def build_instance(instance_spec:InstanceSpec,seed:int=None)->ProblemInstance:
    return generate_instance(design=instance_spec.design,prior=instance_spec.prior,
                             partition=instance_partition(instance_spec),lam=instance_spec.lam,
                             gamma=instance_spec.gamma,group_mode=instance_spec.group_mode,
                             seed=instance_spec.seed if seed is None else seed)


def se_params_for(instance_spec:InstanceSpec,mc_samples:int=DEFAULT_MC_SAMPLES,p_mc:int=DEFAULT_P_MC,
                  seed:int=0)->SEParams:
    """State-evolution parameters matching an instance spec: delta = n/p, group ratios from the partition,
    and in perfect mode the per-group priors (non-zero part, zero)."""
    partition=instance_partition(instance_spec)
    ratios=tuple(float(size)/partition.p for size in partition.sizes)
    ratios=ratios[:-1]+(1.0-sum(ratios[:-1]),)
    group_priors=None
    if instance_spec.group_mode==PERFECT_GROUPS:
        prior=instance_spec.prior
        group_priors=(prior.nonzero_part(),make_prior_spec(ZERO_SIGNAL,noise_sd=prior.noise_sd))
    return make_se_params(gamma=instance_spec.gamma,delta=instance_spec.design.n/instance_spec.design.p,
                          prior=instance_spec.prior,group_ratios=ratios,mc_samples=mc_samples,seed=seed,
                          p_mc=p_mc,group_priors=group_priors)


def _predictions(lam:float,params:SEParams):
    if params is None:
        return np.nan,np.nan,np.nan
    try:
        outcome=predict_metrics(alpha_of_lambda(lam,params),params)
        return outcome.predicted_mse,outcome.tpp_inf,outcome.fdp_inf
    except (CalibrationRangeError,StateEvolutionError) as e:
        logging.warning(f"no prediction at lambda={lam}: {e.args[0]}")
        return np.nan,np.nan,np.nan


def _solve_at(solver,instance:ProblemInstance,lam:float,solver_config:SolverConfig)->SolverTrace:
    return solver(instance.with_lambda(lam),solver_config)


def sweep_path(instance_spec:InstanceSpec,lambda_grid,solver_choice:str,params:SEParams=None,
               solver_config:SolverConfig=None,n_jobs:int=1,
               solver_factory:SolverFactory=None)->PathResult:
    """
    One instance, one fresh solve per lambda. Predicted columns are NaN where lambda >= lambda_max
    or when no state-evolution parameters are given.
    """
    lambdas=np.asarray(lambda_grid,dtype=np.float64).ravel()
    if lambdas.size==0:
        raise ConfigurationError("lambda grid is empty",key=LAMBDA_GRID_KEY)
    if np.any(np.diff(lambdas)<=0):
        raise ConfigurationError("lambda grid must be strictly increasing",key=LAMBDA_GRID_KEY)
    solver_config=solver_config or make_solver_config()
    solver_factory=solver_factory or SolverFactory()
    solver=solver_factory.get_solver(solver_choice).function
    instance=build_instance(instance_spec)
    traces=Parallel(n_jobs=n_jobs)(delayed(_solve_at)(solver,instance,lam,solver_config) for lam in lambdas)
    rows=[]
    for lam,trace in zip(lambdas,traces):
        metrics=empirical_metrics(trace.final_beta,instance.truth.beta0)
        predicted_mse,tpp_inf,fdp_inf=_predictions(float(lam),params)
        rows.append(PathRow(lam=float(lam),empirical_mse=metrics.mse,tpp=metrics.tpp,fdp=metrics.fdp,
                            n_selected=metrics.n_selected,predicted_mse=predicted_mse,tpp_inf=tpp_inf,
                            fdp_inf=fdp_inf))
    logging.info(f"path of {lambdas.size} points solved with {solver_choice}")
    return PathResult(lambdas=lambdas,rows=tuple(rows))


def path_frame(result:PathResult)->pd.DataFrame:
    frame=pd.DataFrame([row._asdict() for row in result.rows]).rename(columns={'lam':'lambda'})
    return frame[PATH_COLUMNS]


def qq_compare(beta_hat:np.ndarray,se:SEOutcome,params:SEParams,seed:int=0)->QQTable:
    """Quantiles of beta_hat against those of eta(Pi + tau* Z, alpha tau*) at 0.01, ..., 0.99."""
    probs=np.linspace(0.01,0.99,QQ_PROBS_COUNT)
    draws=monte_carlo_draws(params._replace(seed=seed))
    predicted=prox_sgl(make_prox_input(draws.signal+se.tau_star*draws.gaussian,se.alpha*se.tau_star,
                                       params.gamma,draws.partition))
    return QQTable(probs=probs,empirical_q=np.quantile(np.asarray(beta_hat,dtype=np.float64),probs),
                   predicted_q=np.quantile(predicted.ravel(),probs))


def qq_frame(table:QQTable)->pd.DataFrame:
    return pd.DataFrame({'prob':table.probs,'empirical_q':table.empirical_q,'predicted_q':table.predicted_q})[QQ_COLUMNS]


def _characterize_one(instance_spec:InstanceSpec,seed:int,solver_config:SolverConfig,predicted_mse:float):
    instance=build_instance(instance_spec,seed=seed)
    trace=solve_amp(instance,solver_config)
    return CharacterizeRow(seed=int(seed),empirical_mse=empirical_metrics(trace.final_beta,instance.truth.beta0).mse,
                           predicted_mse=predicted_mse)


def characterize_mse(instance_spec:InstanceSpec,alpha:float,params:SEParams,seeds,
                     max_iters:int=200,tol:float=1e-8,n_jobs:int=1)->list:
    """AMP driven by the state-evolution schedule at alpha on independent instances, against delta(tau*^2 - sigma_w^2)."""
    outcome=se_fixed_point(alpha,params)
    solver_config=make_solver_config(max_iters=max_iters,tol=tol,threshold_policy=SE_DRIVEN,alpha=alpha,
                                     se_outcome=outcome)
    rows=Parallel(n_jobs=n_jobs)(delayed(_characterize_one)(instance_spec,seed,solver_config,outcome.predicted_mse)
                                 for seed in seeds)
    empirical=np.array([row.empirical_mse for row in rows])
    logging.info(f"characterized alpha={alpha} over {len(rows)} seeds: empirical mse {empirical.mean()} "
                 f"(sd {empirical.std()}) vs predicted {outcome.predicted_mse}")
    return list(rows)


def characterize_frame(rows:list)->pd.DataFrame:
    return pd.DataFrame([row._asdict() for row in rows])[CHARACTERIZE_COLUMNS]


def compare_group_information(instance_spec:InstanceSpec,lambda_grid,seeds,solver_choice:str=FISTA,
                              solver_config:SolverConfig=None,n_jobs:int=1)->GroupComparison:
    """Mean empirical MSE along the lambda grid with perfect and with mixed groups, and its minimum."""
    curves={}
    for mode in (PERFECT_GROUPS,MIXED_GROUPS):
        spec=instance_spec._replace(group_mode=mode,partition=None)
        per_seed=[]
        for seed in seeds:
            result=sweep_path(spec._replace(seed=seed),lambda_grid,solver_choice,params=None,
                              solver_config=solver_config,n_jobs=n_jobs)
            per_seed.append([row.empirical_mse for row in result.rows])
        curves[mode]=np.mean(np.asarray(per_seed),axis=0)
    return GroupComparison(perfect_min_mse=float(curves[PERFECT_GROUPS].min()),
                           mixed_min_mse=float(curves[MIXED_GROUPS].min()),
                           perfect_curve=curves[PERFECT_GROUPS],mixed_curve=curves[MIXED_GROUPS])


def amp_fista_gap(instance:ProblemInstance,config:SolverConfig,fista_iters:int=5000)->np.ndarray:
    """||beta_FISTA - beta^t_AMP||^2/p for t = 0, 1, ... with a long FISTA run standing in for the minimiser."""
    reference=solve_fista(instance,make_solver_config(max_iters=fista_iters,tol=1e-14)).final_beta
    trace=solve_amp(instance,config,reference=reference)
    return np.array([record.opt_mse for record in trace.records])


def iterations_to_targets(trace:SolverTrace,targets)->list:
    """(iters, wall_ns) of the first record whose opt_mse is at or below each target, (-1, -1) if never."""
    reached=[]
    for target in targets:
        hit=next((record for record in trace.records
                  if record.opt_mse is not None and record.opt_mse<=target),None)
        reached.append((NOT_REACHED,NOT_REACHED) if hit is None else (hit.iter,hit.elapsed_ns))
    return reached


def race_solvers(instance:ProblemInstance,solver_names,targets,solver_config:SolverConfig,
                 reference_iters:int=5000,solver_factory:SolverFactory=None)->list:
    """
    Runs each solver on the same instance and reports iterations and wall-clock to reach every opt_mse target,
    measured against a long FISTA run at the spectral step, whatever step the race itself uses.
    """
    solver_factory=solver_factory or SolverFactory()
    reference=solve_fista(instance,make_solver_config(max_iters=reference_iters,tol=1e-15)).final_beta
    rows=[]
    for name in solver_names:
        detail=solver_factory.get_solver(name)
        config=solver_factory.update_solver_config(solver_config,detail.bench_params)._replace(stop_mse=min(targets))
        trace=detail.function(instance,config,reference=reference)
        for target,(iters,wall_ns) in zip(targets,iterations_to_targets(trace,targets)):
            rows.append(BenchRow(solver=name,target_mse=float(target),iters=int(iters),wall_ns=int(wall_ns)))
        logging.info(f"bench {name}: {[row.iters for row in rows if row.solver==name]}")
    return rows


def _race_seed(instance_spec:InstanceSpec,seed:int,solver_names,targets,solver_config:SolverConfig,
               reference_iters:int)->list:
    return race_solvers(build_instance(instance_spec,seed=seed),solver_names,targets,solver_config,reference_iters)


def bench(instance_spec:InstanceSpec,solver_names,targets,solver_config:SolverConfig,repetitions:int=1,
          reference_iters:int=5000,n_jobs:int=1)->list:
    """
    Races on `repetitions` instances (seeds seed, seed+1, ...) and reports per (solver, target) the median
    iterations and wall-clock, or -1 when any repetition misses the target.
    """
    seeds=[instance_spec.seed+offset for offset in range(repetitions)]
    per_seed=Parallel(n_jobs=n_jobs)(delayed(_race_seed)(instance_spec,seed,solver_names,targets,solver_config,
                                                         reference_iters) for seed in seeds)
    summary=[]
    for index,row in enumerate(per_seed[0]):
        runs=[rows[index] for rows in per_seed]
        if any(run.iters==NOT_REACHED for run in runs):
            summary.append(row._replace(iters=NOT_REACHED,wall_ns=NOT_REACHED))
        else:
            summary.append(row._replace(iters=int(np.median([run.iters for run in runs])),
                                        wall_ns=int(np.median([run.wall_ns for run in runs]))))
    return summary


def bench_frame(rows:list)->pd.DataFrame:
    return pd.DataFrame([row._asdict() for row in rows])[BENCH_COLUMNS]
