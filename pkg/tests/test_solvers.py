import numpy as np
import pytest
from sglamp.constant import *
from sglamp.component.model import make_partition,make_problem_instance,cost
from sglamp.component.prox import soft_threshold
from sglamp.component.solvers import (estimate_step_size,subgradient_residual,solve_amp,amp_calibrated_lambda,
                                      solve_ista,solve_fista,solve_blockwise,fista_momentum,solve_vamp,RidgeSolver,
                                      trace_frame,trace_diverged)
from sglamp.component.solvers.proximal import _check_decrease
from sglamp.entity.artifact_entity import SEOutcome
from sglamp.entity.config_entity import make_solver_config
from sglamp.entity.solver_factory import SolverFactory
from sglamp.exception import ConfigurationError,StepSizeError
from conftest import small_instance


def _relative_gap(first,second):
    return abs(first-second)/max(1.0,abs(second))


class TestStepSize:

    def test_spectral_rule_stays_below_inverse_lipschitz(self):
        design=np.random.default_rng(0).standard_normal((50,100))/np.sqrt(50)
        largest=np.linalg.norm(design,2)**2
        step=estimate_step_size(design,SPECTRAL_STEP)
        assert 0.9<=step*largest<=1.0

    def test_frobenius_rule(self):
        design=np.random.default_rng(1).standard_normal((30,60))
        assert estimate_step_size(design,FROBENIUS_STEP)==pytest.approx(1/np.sum(design**2))
        assert estimate_step_size(design,FROBENIUS_STEP)<=1/np.linalg.norm(design,2)**2

    def test_gram_frobenius_rule(self):
        # I_4 has ||X^T X||_F = 2
        assert estimate_step_size(np.eye(4),GRAM_FROBENIUS_STEP)==pytest.approx(0.25)
        for shape in ((30,60),(60,30)):
            design=np.random.default_rng(2).standard_normal(shape)
            step=estimate_step_size(design,GRAM_FROBENIUS_STEP)
            assert step==pytest.approx(0.5/np.linalg.norm(design.T@design))
            assert step<estimate_step_size(design,SPECTRAL_STEP)

    def test_gram_frobenius_rule_is_much_smaller_on_wide_gaussian_designs(self):
        design=np.random.default_rng(3).standard_normal((200,400))/np.sqrt(200)
        ratio=estimate_step_size(design,SPECTRAL_STEP)/estimate_step_size(design,GRAM_FROBENIUS_STEP)
        # spectral ~ 0.95/5.8, gram_frobenius ~ 0.5/sqrt(p+p^2/n) ~ 0.5/34.6
        assert 8<ratio<16

    def test_unknown_rule(self):
        with pytest.raises(ConfigurationError):
            estimate_step_size(np.eye(2),"newton")


class TestIsta:

    def test_one_step_with_orthogonal_design(self):
        response=np.array([3.0,-0.2,1.5,-4.0])
        instance=make_problem_instance(np.eye(4),response,make_partition([1,1,1,1]),lam=1.0,gamma=1.0)
        trace=solve_ista(instance,make_solver_config(max_iters=1,step_size=0.5))
        np.testing.assert_allclose(trace.final_beta,soft_threshold(0.5*response,0.5))
        assert [record.iter for record in trace.records]==[0,1]

    def test_cost_is_monotone_and_stationary(self,tiny_instance,precise_config):
        trace=solve_ista(tiny_instance,precise_config)
        costs=np.array([record.cost for record in trace.records])
        assert np.all(np.diff(costs)<=1e-9)
        assert trace.converged
        assert subgradient_residual(tiny_instance,trace.final_beta)<1e-6

    def test_oversized_step_is_reported(self,tiny_instance):
        step=10/np.linalg.norm(tiny_instance.design,2)**2
        with pytest.raises(StepSizeError) as error:
            solve_ista(tiny_instance,make_solver_config(step_size=step))
        assert error.value.suggested_step==pytest.approx(step/2)

    def test_cost_increase_slack_is_absolute(self):
        _check_decrease(ISTA,3,1e6,1e6+5e-10,0.1)
        with pytest.raises(StepSizeError) as error:
            _check_decrease(ISTA,3,1e6,1e6+1e-8,0.1)
        assert error.value.suggested_step==pytest.approx(0.05)


class TestFista:

    def test_momentum_sequence(self):
        np.testing.assert_allclose(fista_momentum(3),[1.0,(1+np.sqrt(5))/2,2.193527],atol=1e-6)

    def test_stationary(self,tiny_instance,precise_config):
        trace=solve_fista(tiny_instance,precise_config)
        assert trace.converged
        assert subgradient_residual(tiny_instance,trace.final_beta)<1e-6

    def test_oversized_step_is_reported(self,tiny_instance):
        step=10/np.linalg.norm(tiny_instance.design,2)**2
        with pytest.raises(StepSizeError) as error:
            solve_fista(tiny_instance,make_solver_config(step_size=step))
        assert error.value.suggested_step==pytest.approx(step/2)

    def test_reproducible(self,tiny_instance):
        config=make_solver_config(max_iters=50)
        first,second=solve_fista(tiny_instance,config),solve_fista(tiny_instance,config)
        np.testing.assert_array_equal(first.final_beta,second.final_beta)
        assert [r.cost for r in first.records]==[r.cost for r in second.records]

    def test_stops_at_target_mse(self,tiny_instance,precise_config):
        reference=solve_fista(tiny_instance,precise_config)
        early=solve_fista(tiny_instance,precise_config._replace(stop_mse=1e-6),reference=reference.final_beta)
        assert early.converged
        assert early.records[-1].opt_mse<=1e-6
        assert early.iters_used<reference.iters_used


class TestBlockwise:

    def test_single_group_sweep_is_an_ista_step(self):
        instance=small_instance(20,8,lam=0.1,gamma=0.5,seed=4,epsilon=0.5)
        config=make_solver_config(max_iters=1,step_size=0.1)
        np.testing.assert_allclose(solve_blockwise(instance,config).final_beta,solve_ista(instance,config).final_beta,
                                   atol=1e-12)

    def test_monotone_and_stationary(self,tiny_instance,precise_config):
        trace=solve_blockwise(tiny_instance,precise_config)
        costs=np.array([record.cost for record in trace.records])
        assert np.all(np.diff(costs)<=1e-9)
        assert subgradient_residual(tiny_instance,trace.final_beta)<1e-6

    def test_group_killed_without_a_step(self):
        instance=small_instance(20,8,lam=1e6,gamma=0.5,membership=[1,1,2,2,3,3,4,4],seed=1)
        trace=solve_blockwise(instance,make_solver_config(max_iters=5))
        np.testing.assert_array_equal(trace.final_beta,np.zeros(8))
        assert trace.converged and trace.iters_used==1


class TestSolversAgree:

    @pytest.mark.parametrize("seed",range(5))
    def test_final_costs(self,seed,precise_config):
        instance=small_instance(30,12,lam=0.2,gamma=0.3,membership=np.repeat(np.arange(4),3),seed=seed,epsilon=0.4)
        costs=[cost(instance,solver(instance,precise_config).final_beta)
               for solver in (solve_ista,solve_fista,solve_blockwise)]
        assert max(costs)-min(costs)<=1e-9*max(1.0,min(costs))

    def test_trace_cost_matches_model(self,tiny_instance):
        config=make_solver_config(max_iters=30)
        for solver in (solve_ista,solve_fista,solve_blockwise,solve_vamp):
            trace=solver(tiny_instance,config)
            assert trace.records[-1].cost==pytest.approx(cost(tiny_instance,trace.final_beta),rel=1e-10)
            assert trace.records[0].iter==0
            assert trace.records[0].opt_mse==pytest.approx(np.sum(tiny_instance.truth.beta0**2)/tiny_instance.p)

    def test_trace_frame_columns(self,tiny_instance):
        frame=trace_frame(solve_fista(tiny_instance,make_solver_config(max_iters=10)))
        assert list(frame.columns)==TRACE_COLUMNS
        assert frame['iter'].tolist()==list(range(len(frame)))
        assert frame['elapsed_ns'].is_monotonic_increasing


class TestAmp:

    def test_huge_lambda_returns_zero(self,tiny_instance):
        trace=solve_amp(tiny_instance.with_lambda(1e9),make_solver_config(max_iters=50))
        np.testing.assert_array_equal(trace.final_beta,np.zeros(tiny_instance.p))
        np.testing.assert_array_equal(trace.final_residual,tiny_instance.response)
        assert trace.converged
        assert trace.records[0].cost==pytest.approx(0.5*tiny_instance.response@tiny_instance.response)

    def test_schedule_driven_thresholds(self,medium_instance):
        outcome=SEOutcome(alpha=1.2,tau_star=0.5,tau_schedule=(1.0,0.8,0.6))
        config=make_solver_config(max_iters=5,tol=1e-300,threshold_policy=SE_DRIVEN,alpha=1.2,se_outcome=outcome)
        trace=solve_amp(medium_instance,config)
        np.testing.assert_allclose(trace.thresholds,[1.2,0.96,0.72,0.6,0.6])

    def test_killed_first_iterate_keeps_following_the_schedule(self,medium_instance):
        outcome=SEOutcome(alpha=1.2,tau_star=0.5,tau_schedule=(100.0,0.8,0.6))
        config=make_solver_config(max_iters=200,tol=1e-8,threshold_policy=SE_DRIVEN,alpha=1.2,se_outcome=outcome)
        trace=solve_amp(medium_instance,config)
        assert trace.iters_used>=4
        np.testing.assert_allclose(trace.thresholds[:4],[120.0,0.96,0.72,0.6])
        assert np.count_nonzero(trace.final_beta)>0

    def test_empirical_tau_fixed_point_solves_calibrated_lambda(self,medium_instance,precise_config):
        config=make_solver_config(max_iters=3000,tol=1e-10,threshold_policy=EMPIRICAL_TAU,alpha=1.2)
        trace=solve_amp(medium_instance,config)
        assert trace.converged and not trace_diverged(trace)
        lam=amp_calibrated_lambda(trace,medium_instance)
        assert lam>0
        assert subgradient_residual(medium_instance,trace.final_beta,lam)<=1e-4
        calibrated=medium_instance.with_lambda(lam)
        reference=solve_fista(calibrated,precise_config)
        assert _relative_gap(cost(calibrated,trace.final_beta),cost(calibrated,reference.final_beta))<=1e-6

    def test_fixed_lambda_policy_matches_fista(self,medium_instance,precise_config):
        trace=solve_amp(medium_instance,make_solver_config(max_iters=3000,tol=1e-10,threshold_policy=FIXED_LAMBDA))
        assert trace.converged
        reference=solve_fista(medium_instance,precise_config)
        assert _relative_gap(cost(medium_instance,trace.final_beta),cost(medium_instance,reference.final_beta))<=1e-6

    def test_needs_alpha_for_empirical_tau(self):
        with pytest.raises(ConfigurationError):
            make_solver_config(threshold_policy=EMPIRICAL_TAU)


class TestVamp:

    @pytest.mark.parametrize("use_svd",[True,False])
    def test_ridge_stage_with_orthonormal_columns(self,use_svd):
        design,_=np.linalg.qr(np.random.default_rng(0).standard_normal((6,4)))
        rhs=np.array([1.0,-2.0,0.5,3.0])
        beta,trace=RidgeSolver(design,use_svd=use_svd).solve(1.0,rhs)
        np.testing.assert_allclose(beta,rhs/2,atol=1e-12)
        assert trace==pytest.approx(2.0)

    def test_ridge_paths_agree(self):
        design=np.random.default_rng(1).standard_normal((20,30))
        rhs=np.random.default_rng(2).standard_normal(30)
        by_svd=RidgeSolver(design,use_svd=True).solve(0.7,rhs)
        by_cholesky=RidgeSolver(design,use_svd=False).solve(0.7,rhs)
        np.testing.assert_allclose(by_svd[0],by_cholesky[0],atol=1e-9)
        assert by_svd[1]==pytest.approx(by_cholesky[1],rel=1e-9)

    def test_matches_fista_on_gaussian_design(self,medium_instance,precise_config):
        trace=solve_vamp(medium_instance,make_solver_config(max_iters=500,tol=1e-10,damping=0.1))
        reference=solve_fista(medium_instance,precise_config)
        assert _relative_gap(cost(medium_instance,trace.final_beta),cost(medium_instance,reference.final_beta))<=1e-3

    def test_zero_first_denoise_does_not_stop_the_run(self,medium_instance):
        trace=solve_vamp(medium_instance,make_solver_config(max_iters=50,tol=1e-10),initial_rho=1e-3)
        assert trace.iters_used>1
        assert np.count_nonzero(trace.final_beta)>0

    @pytest.mark.parametrize("initial_rho",[0.1,10.0])
    def test_fixed_point_does_not_depend_on_initial_rho(self,medium_instance,precise_config,initial_rho):
        config=make_solver_config(max_iters=500,tol=1e-10,damping=0.1)
        default=solve_vamp(medium_instance,config)
        started=solve_vamp(medium_instance,config,initial_rho=initial_rho)
        best=cost(medium_instance,solve_fista(medium_instance,precise_config).final_beta)
        assert _relative_gap(cost(medium_instance,started.final_beta),best)<=1e-3
        assert np.linalg.norm(started.final_beta-default.final_beta)**2/medium_instance.p<=1e-4

    def test_damping_range(self):
        with pytest.raises(ConfigurationError):
            make_solver_config(damping=1.0)
        with pytest.raises(ConfigurationError):
            solve_vamp(small_instance(10,4,lam=0.1,gamma=0.5),make_solver_config(),initial_rho=0.0)


class TestSubgradientResidual:

    def test_zero_is_optimal_above_lambda_max(self,tiny_instance):
        lam=1.01*np.max(np.abs(tiny_instance.design.T@tiny_instance.response))
        instance=tiny_instance._replace(gamma=1.0).with_lambda(lam)
        assert subgradient_residual(instance,np.zeros(instance.p))==0.0

    def test_detects_non_optimal_point(self,tiny_instance):
        assert subgradient_residual(tiny_instance,np.ones(tiny_instance.p))>1e-3


class TestSolverFactory:

    def test_registry(self):
        factory=SolverFactory()
        assert factory.get_solver(AMP).function is solve_amp
        assert set(factory.solver_names)==set(SOLVER_NAMES)
        assert VAMP not in factory.bench_solver_names
        assert factory.get_solver(AMP).bench_params=={THRESHOLD_POLICY_KEY:FIXED_LAMBDA}

    def test_unknown_solver(self):
        with pytest.raises(ConfigurationError) as error:
            SolverFactory().get_solver("newton")
        assert error.value.key==SOLVER_KEY

    def test_update_solver_config(self):
        config=make_solver_config()
        assert SolverFactory.update_solver_config(config,{'max_iters':7}).max_iters==7
        with pytest.raises(ConfigurationError):
            SolverFactory.update_solver_config(config,{'momentum':2})
