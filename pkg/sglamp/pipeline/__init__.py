import os,sys
import numpy as np
from sglamp.constant import *
from sglamp.config import Configuration
from sglamp.component.model import ProblemInstance,save_instance,load_instance
from sglamp.component.solvers import trace_frame,trace_diverged
from sglamp.component.state_evolution import (se_fixed_point,predict_metrics,alpha_of_lambda,write_se_outcome)
from sglamp.component.analysis import (build_instance,sweep_path,path_frame,qq_compare,qq_frame,bench,bench_frame,
                                       characterize_mse,characterize_frame)
from sglamp.entity.artifact_entity import (GenerationArtifact,SolveArtifact,StateEvolutionArtifact,PathArtifact,
                                           QQArtifact,BenchArtifact,CharacterizeArtifact)
from sglamp.entity.solver_factory import SolverFactory
from sglamp.exception import SglException,ConfigurationError,SolverDivergenceError
from sglamp.logger import logging,log_stage
from sglamp.util import save_vector,write_csv


class Pipeline:

    def __init__(self,config:Configuration,solver_factory:SolverFactory=None):
        try:
            self.config=config
            self.solver_factory=solver_factory or SolverFactory()
            self.output_dir=config.get_output_dir()
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def _output_path(self,file_name:str)->str:
        os.makedirs(self.output_dir,exist_ok=True)
        return os.path.join(self.output_dir,file_name)

    def _instance(self,bundle_dir:str=None)->ProblemInstance:
        if bundle_dir:
            instance=load_instance(bundle_dir)
            if self.config.is_overridden(LAMBDA_KEY):
                return instance.with_lambda(self.config[LAMBDA_KEY])
            logging.info(f"keeping the bundle lambda={instance.lam}")
            return instance
        return build_instance(self.config.get_instance_spec())

    def _se_outcome_for_solver(self):
        if self.config[THRESHOLD_POLICY_KEY]!=SE_DRIVEN:
            return None
        if self.config[ALPHA_KEY] is None:
            raise ConfigurationError("threshold_policy [se_driven] needs alpha",key=ALPHA_KEY)
        return se_fixed_point(self.config[ALPHA_KEY],self.config.get_se_params())

    def start_generation(self)->GenerationArtifact:
        try:
            log_stage("Instance generation")
            instance=self._instance()
            bundle_dir=save_instance(instance,self.output_dir)
            generation_artifact=GenerationArtifact(is_generated=True,message="instance bundle written",
                                                   bundle_dir=bundle_dir,n=instance.n,p=instance.p,
                                                   n_groups=instance.partition.n_groups)
            logging.info(f"generation artifact:{generation_artifact}")
            log_stage("Instance generation",started=False)
            return generation_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_solve(self,bundle_dir:str=None)->SolveArtifact:
        try:
            log_stage("Solve")
            instance=self._instance(bundle_dir)
            solver_name=self.config[SOLVER_KEY]
            solver=self.solver_factory.get_solver(solver_name)
            solver_config=self.config.get_solver_config(se_outcome=self._se_outcome_for_solver())
            trace=solver.function(instance,solver_config)
            trace_file_path=self._output_path(TRACE_FILE_NAME)
            final_beta_file_path=self._output_path(FINAL_BETA_FILE_NAME)
            write_csv(trace_file_path,trace_frame(trace))
            save_vector(final_beta_file_path,trace.final_beta)
            if trace_diverged(trace):
                raise SolverDivergenceError(f"{solver_name}: {trace.diagnostic}")
            solve_artifact=SolveArtifact(is_solved=True,message=trace.diagnostic,solver=solver_name,
                                         trace_file_path=trace_file_path,final_beta_file_path=final_beta_file_path,
                                         converged=trace.converged,iters_used=trace.iters_used,
                                         final_cost=trace.records[-1].cost)
            logging.info(f"solve artifact:{solve_artifact}")
            log_stage("Solve",started=False)
            return solve_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def _write_outcome(self,outcome,message:str)->StateEvolutionArtifact:
        outcome_file_path=self._output_path(SE_OUTCOME_FILE_NAME)
        schedule_file_path=self._output_path(TAU_SCHEDULE_FILE_NAME)
        write_se_outcome(outcome,outcome_file_path,schedule_file_path)
        return StateEvolutionArtifact(message=message,outcome_file_path=outcome_file_path,
                                      schedule_file_path=schedule_file_path,outcome=outcome)

    def start_state_evolution(self,alpha:float=None)->StateEvolutionArtifact:
        try:
            log_stage("State evolution")
            alpha=self.config[ALPHA_KEY] if alpha is None else alpha
            if alpha is None:
                raise ConfigurationError("state evolution needs alpha",key=ALPHA_KEY)
            outcome=predict_metrics(alpha,self.config.get_se_params())
            state_evolution_artifact=self._write_outcome(outcome,f"fixed point at alpha={alpha}")
            logging.info(f"state evolution artifact:{state_evolution_artifact}")
            log_stage("State evolution",started=False)
            return state_evolution_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_calibration(self,alpha:float=None,lam:float=None)->StateEvolutionArtifact:
        """alpha -> lambda when alpha is given, otherwise lambda -> alpha."""
        try:
            log_stage("Calibration")
            params=self.config.get_se_params()
            if alpha is None:
                lam=self.config[LAMBDA_KEY] if lam is None else lam
                alpha=alpha_of_lambda(lam,params)
            outcome=predict_metrics(alpha,params)
            calibration_artifact=self._write_outcome(outcome,f"alpha={outcome.alpha} <-> lambda={outcome.lam}")
            logging.info(f"calibration artifact:{calibration_artifact}")
            log_stage("Calibration",started=False)
            return calibration_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_path(self,n_jobs:int=1)->PathArtifact:
        try:
            log_stage("Lambda path")
            result=sweep_path(self.config.get_instance_spec(),self.config.get_lambda_grid(),self.config[SOLVER_KEY],
                              params=self.config.get_se_params(),solver_config=self.config.get_solver_config(),
                              n_jobs=n_jobs,solver_factory=self.solver_factory)
            path_file_path=self._output_path(PATH_FILE_NAME)
            write_csv(path_file_path,path_frame(result))
            path_artifact=PathArtifact(message=f"{len(result.rows)} path points",path_file_path=path_file_path,
                                       result=result)
            logging.info(f"path artifact written to [{path_file_path}]")
            log_stage("Lambda path",started=False)
            return path_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_qq(self,bundle_dir:str=None)->QQArtifact:
        try:
            log_stage("Quantile comparison")
            instance=self._instance(bundle_dir)
            params=self.config.get_se_params()
            outcome=predict_metrics(alpha_of_lambda(instance.lam,params),params)
            solver=self.solver_factory.get_solver(self.config[SOLVER_KEY])
            trace=solver.function(instance,self.config.get_solver_config(se_outcome=self._se_outcome_for_solver()))
            table=qq_compare(trace.final_beta,outcome,params,seed=self.config[SEED_KEY])
            qq_file_path=self._output_path(QQ_FILE_NAME)
            write_csv(qq_file_path,qq_frame(table))
            qq_artifact=QQArtifact(message=f"quantiles at lambda={instance.lam}",qq_file_path=qq_file_path,
                                   max_gap=float(np.max(np.abs(table.empirical_q-table.predicted_q))))
            logging.info(f"qq artifact:{qq_artifact}")
            log_stage("Quantile comparison",started=False)
            return qq_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_bench(self,parallel_seeds:bool=False)->BenchArtifact:
        try:
            log_stage("Solver bench")
            solver_config=self.config.get_solver_config(se_outcome=self._se_outcome_for_solver())
            rows=bench(self.config.get_instance_spec(),self.solver_factory.bench_solver_names,self.config.get_targets(),
                       solver_config,repetitions=self.config[REPETITIONS_KEY],
                       reference_iters=self.config[REFERENCE_ITERS_KEY],n_jobs=-1 if parallel_seeds else 1)
            bench_file_path=self._output_path(BENCH_FILE_NAME)
            write_csv(bench_file_path,bench_frame(rows))
            bench_artifact=BenchArtifact(message=f"{len(rows)} bench rows",bench_file_path=bench_file_path,rows=rows)
            logging.info(f"bench artifact:{bench_artifact}")
            log_stage("Solver bench",started=False)
            return bench_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def start_characterize(self,parallel_seeds:bool=False)->CharacterizeArtifact:
        try:
            log_stage("MSE characterization")
            alpha=self.config[ALPHA_KEY]
            if alpha is None:
                raise ConfigurationError("characterize needs alpha",key=ALPHA_KEY)
            seeds=[self.config[SEED_KEY]+offset for offset in range(self.config[N_SEEDS_KEY])]
            rows=characterize_mse(self.config.get_instance_spec(),alpha,self.config.get_se_params(),seeds,
                                  max_iters=self.config[MAX_ITERS_KEY],tol=self.config[TOL_KEY],
                                  n_jobs=-1 if parallel_seeds else 1)
            characterize_file_path=self._output_path(CHARACTERIZE_FILE_NAME)
            write_csv(characterize_file_path,characterize_frame(rows))
            characterize_artifact=CharacterizeArtifact(message=f"{len(rows)} seeds",
                                                       characterize_file_path=characterize_file_path,
                                                       mean_empirical_mse=float(np.mean([row.empirical_mse for row in rows])),
                                                       predicted_mse=rows[0].predicted_mse)
            logging.info(f"characterize artifact:{characterize_artifact}")
            log_stage("MSE characterization",started=False)
            return characterize_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def run_pipeline(self):
        """Generate, solve and predict for the configured experiment."""
        try:
            generation_artifact=self.start_generation()
            print(f'\n generation_artifact:{generation_artifact}')
            solve_artifact=self.start_solve(bundle_dir=generation_artifact.bundle_dir)
            print(f'\n solve_artifact:{solve_artifact}')
            calibration_artifact=self.start_calibration(alpha=self.config[ALPHA_KEY])
            print(f'\n calibration_artifact:{calibration_artifact.message}')
            return generation_artifact,solve_artifact,calibration_artifact
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e
