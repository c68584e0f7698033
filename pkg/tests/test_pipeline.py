import os
import numpy as np
import pytest
from sglamp.constant import *
from sglamp.config import Configuration
from sglamp.pipeline import Pipeline
from sglamp.util import load_vector,read_key_value_file


SMALL={N_KEY:50,P_KEY:100,MC_SAMPLES_KEY:20000,P_MC_KEY:1000}


def _pipeline(tmp_path,**overrides):
    return Pipeline(Configuration(overrides={**SMALL,OUTPUT_DIR_KEY:str(tmp_path),**overrides}))


def test_generate_solve_calibrate(tmp_path):
    generation,solve,calibration=_pipeline(tmp_path,**{ALPHA_KEY:1.0}).run_pipeline()
    assert generation.is_generated and (generation.n,generation.p,generation.n_groups)==(50,100,2)
    assert solve.is_solved and os.path.exists(solve.trace_file_path)
    assert load_vector(solve.final_beta_file_path).shape==(100,)
    outcome=read_key_value_file(calibration.outcome_file_path)
    assert outcome['alpha']==1.0
    assert outcome['lambda']==pytest.approx(calibration.outcome.lam)


def test_solve_reads_a_bundle(tmp_path):
    pipeline=_pipeline(tmp_path,**{LAMBDA_KEY:1e9,SOLVER_KEY:AMP})
    bundle_dir=pipeline.start_generation().bundle_dir
    solve=pipeline.start_solve(bundle_dir=bundle_dir)
    assert solve.converged
    np.testing.assert_array_equal(load_vector(solve.final_beta_file_path),np.zeros(100))


def test_se_driven_solve(tmp_path):
    solve=_pipeline(tmp_path,**{ALPHA_KEY:1.0,THRESHOLD_POLICY_KEY:SE_DRIVEN,SOLVER_KEY:AMP,
                                MAX_ITERS_KEY:30}).start_solve()
    assert solve.iters_used<=30
