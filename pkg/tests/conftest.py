import os
import tempfile

os.environ.setdefault('SGLAMP_LOG_DIR',os.path.join(tempfile.gettempdir(),'sglamp-test-logs'))

import numpy as np
import pytest
from sglamp.constant import *
from sglamp.component.model import make_partition,generate_instance
from sglamp.entity.config_entity import make_design_spec,make_prior_spec,make_solver_config


def small_instance(n:int,p:int,lam:float,gamma:float,membership=None,seed:int=0,epsilon:float=0.2,
                   value:float=1.0,noise_sd:float=0.1,prior_kind:str=POINT_MASS,design_kind:str=GAUSSIAN_IID):
    partition=make_partition(np.ones(p) if membership is None else membership)
    return generate_instance(design=make_design_spec(design_kind,n,p),
                             prior=make_prior_spec(prior_kind,epsilon=epsilon,value=value,noise_sd=noise_sd),
                             partition=partition,lam=lam,gamma=gamma,group_mode=MIXED_GROUPS,seed=seed)


@pytest.fixture
def tiny_instance():
    """n=20, p=8, four groups of two."""
    return small_instance(20,8,lam=0.1,gamma=0.5,membership=[1,1,2,2,3,3,4,4],epsilon=0.5,seed=3)


@pytest.fixture
def medium_instance():
    """n=250, p=500, groups of five, 10% of entries equal to 1."""
    return small_instance(250,500,lam=0.5,gamma=0.5,membership=np.repeat(np.arange(100),5),epsilon=0.1,seed=11)


@pytest.fixture
def precise_config():
    return make_solver_config(max_iters=20000,tol=1e-14)
