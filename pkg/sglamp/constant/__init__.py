import os
from datetime import datetime

ROOT_DIR=os.getcwd()
CONFIG_DIR='config'
SOLVER_CONFIG_FILE_NAME='solver.yaml'
SOLVER_CONFIG_FILE_PATH=os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
                                     CONFIG_DIR,SOLVER_CONFIG_FILE_NAME)

CURRENT_TIME_STAMP=datetime.now().strftime('%Y-%m-%d-%H-%M-%S')

RESOLVED_CONFIG_FILE_NAME='resolved_config.yaml'

# Matrix / vector binary layout
MATRIX_MAGIC=b'SGLM'
MATRIX_HEADER_FORMAT='<4sIII'
MATRIX_HEADER_SIZE=16

# Instance bundle layout
BUNDLE_DESIGN_FILE_NAME='design.mat'
BUNDLE_RESPONSE_FILE_NAME='response.vec'
BUNDLE_META_FILE_NAME='meta.cfg'
BUNDLE_GROUPS_FILE_NAME='groups.csv'
BUNDLE_BETA0_FILE_NAME='beta0.vec'
BUNDLE_NOISE_FILE_NAME='noise.vec'

META_LAMBDA_KEY='lambda'
META_GAMMA_KEY='gamma'
META_SIGMA_W_KEY='sigma_w'
META_SEED_KEY='seed'
META_GROUPS_KEY='groups'

# Output file names
TRACE_FILE_NAME='trace.csv'
FINAL_BETA_FILE_NAME='final_beta.vec'
SE_OUTCOME_FILE_NAME='se_outcome.cfg'
TAU_SCHEDULE_FILE_NAME='tau_schedule.csv'
PATH_FILE_NAME='path.csv'
QQ_FILE_NAME='qq.csv'
BENCH_FILE_NAME='bench.csv'
CHARACTERIZE_FILE_NAME='characterize.csv'

TRACE_COLUMNS=['iter','cost','opt_mse','elapsed_ns']
PATH_COLUMNS=['lambda','empirical_mse','predicted_mse','tpp','tpp_inf','fdp','fdp_inf','n_selected']
QQ_COLUMNS=['prob','empirical_q','predicted_q']
BENCH_COLUMNS=['solver','target_mse','iters','wall_ns']
CHARACTERIZE_COLUMNS=['seed','empirical_mse','predicted_mse']

# Design kinds
GAUSSIAN_IID='gaussian_iid'
BERNOULLI_PM1='bernoulli_pm1'
SHIFTED_EXPONENTIAL='shifted_exponential'
ROT_INVARIANT='rot_invariant'
DESIGN_KINDS=(GAUSSIAN_IID,BERNOULLI_PM1,SHIFTED_EXPONENTIAL,ROT_INVARIANT)

# Signal priors
POINT_MASS='point_mass'
BERNOULLI_GAUSSIAN='bernoulli_gaussian'
ZERO_SIGNAL='zero'
PRIOR_KINDS=(POINT_MASS,BERNOULLI_GAUSSIAN,ZERO_SIGNAL)

# Group modes
PERFECT_GROUPS='perfect'
MIXED_GROUPS='mixed'
GROUP_MODES=(PERFECT_GROUPS,MIXED_GROUPS)

# AMP threshold policies
EMPIRICAL_TAU='empirical_tau'
SE_DRIVEN='se_driven'
FIXED_LAMBDA='fixed_lambda'
THRESHOLD_POLICIES=(EMPIRICAL_TAU,SE_DRIVEN,FIXED_LAMBDA)

# Step size rules
SPECTRAL_STEP='spectral'
FROBENIUS_STEP='frobenius'
GRAM_FROBENIUS_STEP='gram_frobenius'
STEP_RULES=(SPECTRAL_STEP,FROBENIUS_STEP,GRAM_FROBENIUS_STEP)
POWER_ITERATIONS=30
STEP_SAFETY_FACTOR=0.95
# fraction of the 1/||X^T X||_F bound taken by the gram_frobenius rule
GRAM_STEP_FRACTION=0.5

# Solver names
AMP='amp'
ISTA='ista'
FISTA='fista'
BLOCKWISE='blockwise'
VAMP='vamp'
SOLVER_NAMES=(AMP,ISTA,FISTA,BLOCKWISE,VAMP)

# Solver registry (config/solver.yaml)
SOLVER_SELECTION_KEY='solver_selection'
MODULE_KEY='module'
FUNCTION_KEY='function'
BENCH_PARAM_KEY='bench_params'
BENCH_KEY='bench'

# Numerical conventions
ZERO_TOL=1e-10
# absolute slack on cost(beta^{t+1}) <= cost(beta^t) for ISTA and blockwise sweeps
COST_INCREASE_TOL=1e-9
VAMP_DEGENERACY_TOL=1e-12
VAMP_ONSAGER_MIN=1e-5
VAMP_ONSAGER_MAX=1-1e-5
VAMP_SVD_MIN_ITERS=20
VAMP_INITIAL_RHO=1.0
DIVERGENCE_LIMIT=1e150
DIVERGED_DIAGNOSTIC='diverged'

# State evolution defaults
DEFAULT_P_MC=2000
DEFAULT_MC_SAMPLES=200000
SE_TOL=1e-9
SE_MAX_ITERS=1000
ALPHA_TOL=1e-4
ALPHA_MAX_MARGIN=1e-6
QQ_PROBS_COUNT=99

# Bench
BENCH_TARGETS=(1e-2,1e-3,1e-4,1e-5)
NOT_REACHED=-1

# Experiment config keys (flat)
SEED_KEY='seed'
OUTPUT_DIR_KEY='output_dir'
DESIGN_KIND_KEY='design_kind'
N_KEY='n'
P_KEY='p'
CONDITION_NUMBER_KEY='condition_number'
PRIOR_KIND_KEY='prior_kind'
EPSILON_KEY='epsilon'
SIGNAL_VALUE_KEY='signal_value'
SIGNAL_SD_KEY='signal_sd'
NOISE_SD_KEY='noise_sd'
GROUP_MODE_KEY='group_mode'
GROUPS_KEY='groups'
LAMBDA_KEY='lambda'
GAMMA_KEY='gamma'
SOLVER_KEY='solver'
MAX_ITERS_KEY='max_iters'
TOL_KEY='tol'
THRESHOLD_POLICY_KEY='threshold_policy'
ALPHA_KEY='alpha'
STEP_SIZE_KEY='step_size'
STEP_RULE_KEY='step_rule'
DAMPING_KEY='damping'
MC_SAMPLES_KEY='mc_samples'
P_MC_KEY='p_mc'
LAMBDA_GRID_KEY='lambda_grid'
ALPHA_GRID_KEY='alpha_grid'
TARGETS_KEY='targets'
REPETITIONS_KEY='repetitions'
REFERENCE_ITERS_KEY='reference_iters'
N_SEEDS_KEY='n_seeds'

EXPERIMENT_DEFAULTS={
    SEED_KEY:0,
    OUTPUT_DIR_KEY:'artifact',
    DESIGN_KIND_KEY:GAUSSIAN_IID,
    N_KEY:100,
    P_KEY:400,
    CONDITION_NUMBER_KEY:1.0,
    PRIOR_KIND_KEY:POINT_MASS,
    EPSILON_KEY:0.5,
    SIGNAL_VALUE_KEY:1.0,
    SIGNAL_SD_KEY:1.0,
    NOISE_SD_KEY:0.0,
    GROUP_MODE_KEY:PERFECT_GROUPS,
    GROUPS_KEY:None,
    LAMBDA_KEY:1.0,
    GAMMA_KEY:0.5,
    SOLVER_KEY:FISTA,
    MAX_ITERS_KEY:1000,
    TOL_KEY:1e-8,
    THRESHOLD_POLICY_KEY:None,
    ALPHA_KEY:None,
    STEP_SIZE_KEY:None,
    STEP_RULE_KEY:SPECTRAL_STEP,
    DAMPING_KEY:0.1,
    MC_SAMPLES_KEY:DEFAULT_MC_SAMPLES,
    P_MC_KEY:DEFAULT_P_MC,
    LAMBDA_GRID_KEY:None,
    ALPHA_GRID_KEY:None,
    TARGETS_KEY:list(BENCH_TARGETS),
    REPETITIONS_KEY:1,
    REFERENCE_ITERS_KEY:5000,
    N_SEEDS_KEY:1,
}

# CLI exit codes
EXIT_OK=0
EXIT_CONFIG_ERROR=2
EXIT_DIVERGENCE=3
EXIT_FAILURE=1
