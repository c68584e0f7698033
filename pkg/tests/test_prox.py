import numpy as np
import pytest
from sglamp.component.model import make_partition,make_problem_instance,cost
from sglamp.component.prox import (make_prox_input,soft_threshold,prox_sgl,prox_sgl_jacobian_diag,prox_onsager,
                                   prox_single_group)
from sglamp.component.solvers import subgradient_residual
from sglamp.exception import ConfigurationError,DimensionError


MEMBERSHIP=[1,1,1,2,2,3,4,4]


def _prox(point,threshold,gamma,membership=MEMBERSHIP):
    return prox_sgl(make_prox_input(point,threshold,gamma,make_partition(membership)))


def _jacobian(point,threshold,gamma,membership=MEMBERSHIP):
    return prox_sgl_jacobian_diag(make_prox_input(point,threshold,gamma,make_partition(membership)))


def _random_cases(count,seed=0):
    rng=np.random.default_rng(seed)
    for _ in range(count):
        yield rng.normal(0,2,size=len(MEMBERSHIP)),rng.uniform(0.1,2.0),rng.uniform(0,1)


def test_soft_threshold_examples():
    np.testing.assert_allclose(soft_threshold(np.array([3.0,-0.5,-2.0]),1.0),[2.0,0.0,-1.0])
    with pytest.raises(ConfigurationError):
        soft_threshold(np.ones(2),-1.0)


def test_worked_example():
    np.testing.assert_allclose(_prox([3.0,-1.0],2.0,0.5,[1,1]),[2*(1-np.sqrt(2)/2),0.0],atol=1e-12)
    np.testing.assert_allclose(_prox([3.0,-1.0],2.0,0.5,[1,1])[0],0.58579,atol=1e-5)
    np.testing.assert_allclose(_jacobian([3.0,-1.0],2.0,0.5,[1,1]),[1.0,0.0],atol=1e-12)


def test_small_group_is_killed():
    np.testing.assert_array_equal(_prox([0.5,0.5],2.0,0.5,[1,1]),[0.0,0.0])
    np.testing.assert_array_equal(_jacobian([0.5,0.5],2.0,0.5,[1,1]),[0.0,0.0])


def test_gamma_one_is_soft_threshold():
    point=np.linspace(-3,3,8)
    np.testing.assert_allclose(_prox(point,1.2,1.0),soft_threshold(point,1.2))
    np.testing.assert_array_equal(_jacobian(point,1.2,1.0),(np.abs(point)>1.2).astype(float))


def test_singleton_groups_are_soft_threshold():
    point=np.linspace(-3,3,7)
    np.testing.assert_allclose(_prox(point,0.9,0.3,np.arange(7)),soft_threshold(point,0.9),atol=1e-12)


def test_zero_threshold_is_identity():
    point=np.array([0.3,-2.0,0.0,1.0,5.0,-0.1,0.2,0.7])
    np.testing.assert_array_equal(_prox(point,0.0,0.5),point)
    np.testing.assert_array_equal(_jacobian(point,0.0,0.5),np.ones(8))


def test_solution_satisfies_optimality_conditions():
    p=len(MEMBERSHIP)
    for point,threshold,gamma in _random_cases(200):
        instance=make_problem_instance(np.eye(p),point,make_partition(MEMBERSHIP),lam=threshold,gamma=gamma)
        solution=_prox(point,threshold,gamma)
        assert subgradient_residual(instance,solution)<1e-9


def test_solution_beats_perturbations():
    p=len(MEMBERSHIP)
    rng=np.random.default_rng(1)
    for point,threshold,gamma in _random_cases(50,seed=2):
        instance=make_problem_instance(np.eye(p),point,make_partition(MEMBERSHIP),lam=threshold,gamma=gamma)
        solution=_prox(point,threshold,gamma)
        best=cost(instance,solution)
        for _ in range(20):
            assert best<=cost(instance,solution+rng.normal(0,1e-3,size=p))+1e-12


def test_jacobian_matches_finite_differences():
    partition=make_partition(MEMBERSHIP)
    step=1e-6
    checked=0
    for point,threshold,gamma in _random_cases(300,seed=3):
        u=soft_threshold(point,gamma*threshold)
        margin=partition.expand(np.abs(partition.group_norms(u)-(1-gamma)*threshold*partition.weights))
        smooth=(np.abs(np.abs(point)-gamma*threshold)>1e-3)&(margin>1e-3)
        jacobian=_jacobian(point,threshold,gamma)
        for j in np.flatnonzero(smooth):
            up,down=point.copy(),point.copy()
            up[j]+=step
            down[j]-=step
            numeric=(_prox(up,threshold,gamma)[j]-_prox(down,threshold,gamma)[j])/(2*step)
            assert jacobian[j]==pytest.approx(numeric,abs=1e-5)
            checked+=1
    assert checked>1000


def test_jacobian_lies_in_unit_interval():
    for point,threshold,gamma in _random_cases(500,seed=4):
        jacobian=_jacobian(point,threshold,gamma)
        assert np.all(jacobian>=0) and np.all(jacobian<=1)


def test_nonexpansive_over_batches():
    rng=np.random.default_rng(5)
    partition=make_partition(MEMBERSHIP)
    for threshold,gamma in ((0.5,0.0),(1.0,0.3),(2.0,0.7),(0.8,1.0)):
        first=rng.normal(0,2,size=(2500,partition.p))
        second=first+rng.normal(0,0.5,size=first.shape)
        image_gap=np.linalg.norm(prox_sgl(make_prox_input(first,threshold,gamma,partition))
                                 -prox_sgl(make_prox_input(second,threshold,gamma,partition)),axis=1)
        assert np.all(image_gap<=np.linalg.norm(first-second,axis=1)+1e-12)


def test_group_shrinkage_bounds():
    partition=make_partition(MEMBERSHIP)
    for point,threshold,gamma in _random_cases(200,seed=6):
        soft_norms=partition.group_norms(soft_threshold(point,gamma*threshold))
        prox_norms=partition.group_norms(_prox(point,threshold,gamma))
        assert np.all(prox_norms<=soft_norms+1e-12)
        assert np.all(soft_norms<=partition.group_norms(point)+1e-12)


def test_continuous_across_the_kill_boundary():
    gamma,threshold=0.5,1.0
    edge=gamma*threshold+(1-gamma)*threshold*np.sqrt(2)
    for offset in (1e-8,-1e-8):
        assert np.max(np.abs(_prox([edge+offset,0.0],threshold,gamma,[1,1])))<=1e-7


def test_single_group_helper_agrees():
    rng=np.random.default_rng(7)
    for _ in range(50):
        values=rng.normal(0,2,size=4)
        threshold,gamma=rng.uniform(0.1,2),rng.uniform(0,1)
        np.testing.assert_allclose(prox_single_group(values,threshold,gamma,2.0),
                                   _prox(values,threshold,gamma,[1,1,1,1]),atol=1e-12)


def test_onsager_is_mean_of_diagonal():
    point=np.array([3.0,-1.0,0.2,4.0,-2.5,0.0,1.5,-0.7])
    prox_input=make_prox_input(point,1.0,0.5,make_partition(MEMBERSHIP))
    assert prox_onsager(prox_input)==pytest.approx(np.mean(prox_sgl_jacobian_diag(prox_input)))


def test_input_validation():
    partition=make_partition([1,1,2])
    with pytest.raises(DimensionError):
        make_prox_input(np.ones(4),1.0,0.5,partition)
    with pytest.raises(ConfigurationError):
        make_prox_input(np.ones(3),-1.0,0.5,partition)
    with pytest.raises(ConfigurationError):
        make_prox_input(np.ones(3),1.0,1.5,partition)
