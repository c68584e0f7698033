import sys
import argparse
import yaml
from sglamp.constant import *
from sglamp.config import Configuration,parse_overrides
from sglamp.pipeline import Pipeline
from sglamp.exception import (SglException,ConfigurationError,SolverDivergenceError,CalibrationRangeError,
                              find_cause)
from sglamp.logger import logging,LOG_FILE_PATH


COMMANDS=('gen','solve','se','calibrate','path','bench','qq','characterize')


def build_parser()->argparse.ArgumentParser:
    common=argparse.ArgumentParser(add_help=False)
    common.add_argument("--config",type=str,default=None,help="Experiment config (.yaml, or key=value text)")
    common.add_argument("--output-dir",type=str,default=None,help="Directory for every output of the run")
    common.add_argument("--set",action="append",default=[],metavar="KEY=VALUE",help="Override one config key")
    common.add_argument("--dry-run",action="store_true",help="Print the resolved config and exit")

    parser=argparse.ArgumentParser(prog="sgl",description="Sparse Group LASSO solvers, state evolution and calibration")
    sub=parser.add_subparsers(dest="command",required=True)
    sub.add_parser("gen",parents=[common],help="Generate an instance bundle")

    p_solve=sub.add_parser("solve",parents=[common],help="Run one solver and write its trace")
    p_solve.add_argument("--solver",type=str,choices=SOLVER_NAMES,default=None)
    p_solve.add_argument("--lambda",dest="lam",type=float,default=None)
    p_solve.add_argument("--instance",type=str,default=None,help="Instance bundle directory instead of generating")

    p_se=sub.add_parser("se",parents=[common],help="State-evolution fixed point and predictions at alpha")
    p_se.add_argument("--alpha",type=float,default=None)

    p_cal=sub.add_parser("calibrate",parents=[common],help="Map alpha to lambda, or lambda to alpha")
    p_cal.add_argument("--alpha",type=float,default=None)
    p_cal.add_argument("--lambda",dest="lam",type=float,default=None)

    p_path=sub.add_parser("path",parents=[common],help="Empirical and predicted metrics along a lambda grid")
    p_path.add_argument("--solver",type=str,choices=SOLVER_NAMES,default=None)
    p_path.add_argument("--n-jobs",type=int,default=1,help="Joblib n_jobs over grid points")

    p_bench=sub.add_parser("bench",parents=[common],help="Iterations and wall-clock of every solver to each target")
    p_bench.add_argument("--parallel-seeds",action="store_true",help="Run repetitions in parallel")

    p_qq=sub.add_parser("qq",parents=[common],help="Quantiles of the solution against the scalar channel")
    p_qq.add_argument("--lambda",dest="lam",type=float,default=None)
    p_qq.add_argument("--instance",type=str,default=None)

    p_char=sub.add_parser("characterize",parents=[common],help="Empirical against predicted MSE over seeds")
    p_char.add_argument("--alpha",type=float,default=None)
    p_char.add_argument("--parallel-seeds",action="store_true")
    return parser


def _overrides(args)->dict:
    overrides=parse_overrides(args.set)
    flags={OUTPUT_DIR_KEY:args.output_dir,
           SOLVER_KEY:getattr(args,'solver',None),
           LAMBDA_KEY:getattr(args,'lam',None),
           ALPHA_KEY:getattr(args,'alpha',None)}
    overrides.update({key:value for key,value in flags.items() if value is not None})
    return overrides


def _run(command:str,args,pipeline:Pipeline):
    if command=='gen':
        artifact=pipeline.start_generation()
        print(f"bundle: {artifact.bundle_dir} (n={artifact.n}, p={artifact.p}, groups={artifact.n_groups})")
    elif command=='solve':
        artifact=pipeline.start_solve(bundle_dir=args.instance)
        print(f"{artifact.solver}: {artifact.message} after {artifact.iters_used} iterations, "
              f"cost={artifact.final_cost!r}")
    elif command=='se':
        outcome=pipeline.start_state_evolution().outcome
        print(f"alpha={outcome.alpha!r} tau_star={outcome.tau_star!r} lambda={outcome.lam!r} "
              f"predicted_mse={outcome.predicted_mse!r}")
    elif command=='calibrate':
        if args.lam is not None:
            outcome=pipeline.start_calibration(lam=args.lam).outcome
        else:
            outcome=pipeline.start_calibration(alpha=pipeline.config[ALPHA_KEY]).outcome
        print(f"alpha={outcome.alpha!r} lambda={outcome.lam!r}")
    elif command=='path':
        artifact=pipeline.start_path(n_jobs=args.n_jobs)
        print(f"path: {artifact.path_file_path}")
    elif command=='bench':
        artifact=pipeline.start_bench(parallel_seeds=args.parallel_seeds)
        print(f"bench: {artifact.bench_file_path}")
    elif command=='qq':
        artifact=pipeline.start_qq(bundle_dir=args.instance)
        print(f"qq: {artifact.qq_file_path} max_gap={artifact.max_gap!r}")
    elif command=='characterize':
        artifact=pipeline.start_characterize(parallel_seeds=args.parallel_seeds)
        print(f"mean empirical mse={artifact.mean_empirical_mse!r} predicted={artifact.predicted_mse!r}")


def dispatch(argv=None)->int:
    """Runs one subcommand. Exit codes: 0 ok, 2 configuration error, 3 solver divergence, 1 anything else."""
    parser=build_parser()
    try:
        args=parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0,None) else EXIT_CONFIG_ERROR
    try:
        config=Configuration(config_file_path=args.config,overrides=_overrides(args))
        if args.dry_run:
            print(yaml.safe_dump(config.resolved(),sort_keys=True),end='')
            return EXIT_OK
        pipeline=Pipeline(config=config)
        config.write_resolved(pipeline.output_dir)
        _run(args.command,args,pipeline)
        return EXIT_OK
    except Exception as e:
        logging.exception(f"sgl {args.command} failed")
        configuration_error=find_cause(e,ConfigurationError)
        if configuration_error is not None:
            print(f"configuration error [{configuration_error.key}]: {configuration_error.args[0]}",file=sys.stderr)
            return EXIT_CONFIG_ERROR
        calibration_error=find_cause(e,CalibrationRangeError)
        if calibration_error is not None:
            print(f"calibration error: {calibration_error.args[0]}",file=sys.stderr)
            return EXIT_CONFIG_ERROR
        divergence_error=find_cause(e,SolverDivergenceError)
        if divergence_error is not None:
            print(f"solver diverged: {divergence_error.args[0]}",file=sys.stderr)
            return EXIT_DIVERGENCE
        message=e.args[0] if isinstance(e,SglException) else e
        print(f"error: {message}",file=sys.stderr)
        print(f"details in {LOG_FILE_PATH}",file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(dispatch(sys.argv[1:]))
