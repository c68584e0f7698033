import os,sys
import numpy as np
from sglamp.constant import *
from sglamp.entity.config_entity import (DesignSpec,PriorSpec,SolverConfig,SEParams,InstanceSpec,make_design_spec,
                                         make_prior_spec,make_solver_config,make_se_params)
from sglamp.component.model import make_partition,perfect_partition,mixed_partition
from sglamp.component.analysis import se_params_for
from sglamp.exception import SglException,ConfigurationError
from sglamp.logger import logging
from sglamp.util import read_config_file,write_yaml_file,load_membership,parse_scalar


INT_KEYS=(SEED_KEY,N_KEY,P_KEY,MAX_ITERS_KEY,MC_SAMPLES_KEY,P_MC_KEY,REPETITIONS_KEY,REFERENCE_ITERS_KEY,N_SEEDS_KEY)
FLOAT_KEYS=(CONDITION_NUMBER_KEY,EPSILON_KEY,SIGNAL_VALUE_KEY,SIGNAL_SD_KEY,NOISE_SD_KEY,LAMBDA_KEY,GAMMA_KEY,TOL_KEY,
            ALPHA_KEY,STEP_SIZE_KEY,DAMPING_KEY)
LIST_KEYS=(LAMBDA_GRID_KEY,ALPHA_GRID_KEY,TARGETS_KEY)
CHOICE_KEYS={DESIGN_KIND_KEY:DESIGN_KINDS,PRIOR_KIND_KEY:PRIOR_KINDS,GROUP_MODE_KEY:GROUP_MODES,
             SOLVER_KEY:SOLVER_NAMES,THRESHOLD_POLICY_KEY:THRESHOLD_POLICIES,STEP_RULE_KEY:STEP_RULES}


def parse_overrides(assignments)->dict:
    """['key=value', ...] -> {key: value}"""
    overrides={}
    for assignment in assignments or []:
        if '=' not in assignment:
            raise ConfigurationError(f"override [{assignment}] is not key=value",key=assignment)
        key,value=assignment.split('=',1)
        overrides[key.strip()]=parse_scalar(value)
    return overrides


def _coerce(key:str,value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            if float(value)!=int(float(value)):
                raise ValueError(f"{value} is not an integer")
            return int(float(value))
        if key in FLOAT_KEYS:
            return float(value)
        if key in LIST_KEYS:
            values=value if isinstance(value,(list,tuple)) else [value]
            return [float(item) for item in values]
        if key in CHOICE_KEYS:
            if value not in CHOICE_KEYS[key]:
                raise ValueError(f"[{value}] is not one of {CHOICE_KEYS[key]}")
            return value
        return str(value)
    except (TypeError,ValueError) as e:
        raise ConfigurationError(f"invalid value for [{key}]: {e}",key=key) from e


class Configuration:
    """
    Flat experiment configuration: built-in defaults, then the config file, then overrides.
    Unknown keys are rejected.
    Overrides (command-line flags and --set) are remembered so a loaded instance bundle keeps its own lambda
    unless one is given explicitly.
    """

    def __init__(self,config_file_path:str=None,overrides:dict=None,current_time_stamp:str=CURRENT_TIME_STAMP)->None:
        try:
            self.config_file_path=config_file_path
            self.time_stamp=current_time_stamp
            self.overridden_keys=frozenset(overrides or {})
            config_info=dict(EXPERIMENT_DEFAULTS)
            for source in (read_config_file(config_file_path) if config_file_path else {},overrides or {}):
                unknown=[key for key in source if key not in EXPERIMENT_DEFAULTS]
                if unknown:
                    raise ConfigurationError(f"unknown configuration key [{unknown[0]}]",key=unknown[0])
                config_info.update(source)
            self.config_info={key:_coerce(key,value) for key,value in config_info.items()}
            if self.config_info[THRESHOLD_POLICY_KEY] is None:
                self.config_info[THRESHOLD_POLICY_KEY]=EMPIRICAL_TAU if self.config_info[ALPHA_KEY] is not None \
                                                        else FIXED_LAMBDA
            logging.info(f"configuration resolved from [{config_file_path}] with overrides {overrides}")
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e

    def __getitem__(self,key:str):
        return self.config_info[key]

    def is_overridden(self,key:str)->bool:
        return key in self.overridden_keys

    def resolved(self)->dict:
        return dict(self.config_info)

    def write_resolved(self,output_dir:str)->str:
        resolved_file_path=os.path.join(output_dir,RESOLVED_CONFIG_FILE_NAME)
        write_yaml_file(file_path=resolved_file_path,data=self.resolved())
        return resolved_file_path

    def get_output_dir(self)->str:
        return self.config_info[OUTPUT_DIR_KEY]

    def get_design_spec(self)->DesignSpec:
        design_spec=make_design_spec(kind=self[DESIGN_KIND_KEY],n=self[N_KEY],p=self[P_KEY],
                                     condition_number=self[CONDITION_NUMBER_KEY])
        logging.info(f"design spec:{design_spec}")
        return design_spec

    def get_prior_spec(self)->PriorSpec:
        prior_spec=make_prior_spec(kind=self[PRIOR_KIND_KEY],epsilon=self[EPSILON_KEY],value=self[SIGNAL_VALUE_KEY],
                                   sd=self[SIGNAL_SD_KEY],noise_sd=self[NOISE_SD_KEY])
        logging.info(f"prior spec:{prior_spec}")
        return prior_spec

    def get_partition(self):
        """The membership file when `groups` is set, otherwise the partition implied by group_mode."""
        groups=self[GROUPS_KEY]
        if groups:
            if not os.path.exists(groups):
                raise ConfigurationError(f"groups file not found: [{groups}]",key=GROUPS_KEY)
            partition=make_partition(load_membership(groups))
            if partition.p!=self[P_KEY]:
                raise ConfigurationError(f"groups file covers {partition.p} coordinates, p={self[P_KEY]}",key=GROUPS_KEY)
            return partition
        if self[GROUP_MODE_KEY]==PERFECT_GROUPS:
            return perfect_partition(self[P_KEY],self[EPSILON_KEY])
        return mixed_partition(self[P_KEY])

    def get_instance_spec(self,check_lambda:bool=True)->InstanceSpec:
        if check_lambda and not self[LAMBDA_KEY]>=0:
            raise ConfigurationError(f"lambda must be non-negative, got {self[LAMBDA_KEY]}",key=LAMBDA_KEY)
        if not 0<=self[GAMMA_KEY]<=1:
            raise ConfigurationError(f"gamma must lie in [0,1], got {self[GAMMA_KEY]}",key=GAMMA_KEY)
        return InstanceSpec(design=self.get_design_spec(),prior=self.get_prior_spec(),partition=self.get_partition(),
                            lam=self[LAMBDA_KEY],gamma=self[GAMMA_KEY],group_mode=self[GROUP_MODE_KEY],
                            seed=self[SEED_KEY])

    def get_solver_config(self,se_outcome=None)->SolverConfig:
        solver_config=make_solver_config(max_iters=self[MAX_ITERS_KEY],tol=self[TOL_KEY],
                                         threshold_policy=self[THRESHOLD_POLICY_KEY],alpha=self[ALPHA_KEY],
                                         se_outcome=se_outcome,step_size=self[STEP_SIZE_KEY],
                                         step_rule=self[STEP_RULE_KEY],damping=self[DAMPING_KEY])
        logging.info(f"solver config:{solver_config._replace(se_outcome=None)}")
        return solver_config

    def get_se_params(self)->SEParams:
        return se_params_for(self.get_instance_spec(check_lambda=False),mc_samples=self[MC_SAMPLES_KEY],p_mc=self[P_MC_KEY],
                             seed=self[SEED_KEY])

    def _grid(self,key:str)->np.ndarray:
        grid=self[key]
        if not grid:
            raise ConfigurationError(f"[{key}] must be set for this command",key=key)
        return np.asarray(grid,dtype=np.float64)

    def get_lambda_grid(self)->np.ndarray:
        return self._grid(LAMBDA_GRID_KEY)

    def get_alpha_grid(self)->np.ndarray:
        return self._grid(ALPHA_GRID_KEY)

    def get_targets(self)->list:
        return list(self._grid(TARGETS_KEY))
