import sys
import importlib
from collections import namedtuple
from sglamp.constant import *
from sglamp.entity.config_entity import SolverConfig
from sglamp.exception import SglException,ConfigurationError
from sglamp.logger import logging
from sglamp.util import read_yaml_file


InitializedSolverDetail=namedtuple("InitializedSolverDetail",["solver_name","function","in_bench","bench_params"])


class SolverFactory:
    """
    Solver registry read from config/solver.yaml:

    solver_selection:
      <name>:
        module: <python module>
        function: <callable (instance, config, reference=None) -> SolverTrace>
        bench: <take part in bench races>
        bench_params: <SolverConfig fields overridden during bench races>
    """

    def __init__(self,solver_config_file_path:str=SOLVER_CONFIG_FILE_PATH)->None:
        try:
            self.config:dict=read_yaml_file(file_path=solver_config_file_path)
            self.solvers_initialization_config:dict=dict(self.config[SOLVER_SELECTION_KEY])
            self._initialized={}
        except SglException:
            raise
        except Exception as e:
            raise ConfigurationError(e,key=SOLVER_SELECTION_KEY) from e

    @staticmethod
    def function_for_name(module_name:str,function_name:str):
        try:
            module=importlib.import_module(module_name)
            return getattr(module,function_name)
        except Exception as e:
            raise ConfigurationError(e,key=f"{module_name}.{function_name}") from e

    @staticmethod
    def update_solver_config(config:SolverConfig,params:dict)->SolverConfig:
        if not params:
            return config
        unknown=set(params)-set(SolverConfig._fields)
        if unknown:
            raise ConfigurationError(f"unknown solver parameters {sorted(unknown)}",key=sorted(unknown)[0])
        return config._replace(**params)

    @property
    def solver_names(self)->list:
        return list(self.solvers_initialization_config.keys())

    @property
    def bench_solver_names(self)->list:
        return [name for name in self.solver_names if self.get_solver(name).in_bench]

    def get_solver(self,solver_name:str)->InitializedSolverDetail:
        if solver_name in self._initialized:
            return self._initialized[solver_name]
        if solver_name not in self.solvers_initialization_config:
            raise ConfigurationError(f"unknown solver [{solver_name}], expected one of {self.solver_names}",
                                     key=SOLVER_KEY)
        try:
            solver_info=self.solvers_initialization_config[solver_name]
            function=self.function_for_name(module_name=solver_info[MODULE_KEY],
                                            function_name=solver_info[FUNCTION_KEY])
            detail=InitializedSolverDetail(solver_name=solver_name,
                                           function=function,
                                           in_bench=bool(solver_info.get(BENCH_KEY,True)),
                                           bench_params=dict(solver_info.get(BENCH_PARAM_KEY) or {}))
            logging.info(f"initialized solver: {detail.solver_name} -> {solver_info[MODULE_KEY]}.{solver_info[FUNCTION_KEY]}")
            self._initialized[solver_name]=detail
            return detail
        except SglException:
            raise
        except Exception as e:
            raise SglException(e,sys) from e
