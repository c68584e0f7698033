import os
import numpy as np
import pytest
from sglamp.constant import *
from sglamp.component.model import (make_partition,perfect_partition,make_problem_instance,cost,penalty,
                                    generate_instance,sample_design,save_instance,load_instance,Truth)
from sglamp.entity.config_entity import make_design_spec,make_prior_spec
from sglamp.exception import ConfigurationError,DimensionError
from sglamp.util import load_matrix


def _loop_cost(design,response,membership,beta,lam,gamma):
    residual=[response[i]-sum(design[i,j]*beta[j] for j in range(len(beta))) for i in range(len(response))]
    value=0.5*sum(r*r for r in residual)
    for group in set(membership):
        members=[j for j in range(len(beta)) if membership[j]==group]
        value+=(1-gamma)*lam*np.sqrt(len(members))*np.sqrt(sum(beta[j]**2 for j in members))
    value+=gamma*lam*sum(abs(b) for b in beta)
    return value


class TestPartition:

    def test_single_group(self):
        partition=make_partition([1,1,1,1])
        assert partition.n_groups==1
        assert partition.sizes.tolist()==[4]
        assert partition.weights.tolist()==[2.0]

    def test_interleaved_groups(self):
        partition=make_partition([1,2,1,2])
        assert partition.sizes.tolist()==[2,2]
        np.testing.assert_allclose(partition.weights,np.sqrt(2))
        assert partition.indices(1).tolist()==[0,2]
        assert partition.indices(2).tolist()==[1,3]

    def test_arbitrary_labels_are_relabelled(self):
        partition=make_partition([7,3,3])
        assert partition.membership.tolist()==[2,1,1]
        assert partition.original_membership().tolist()==[7,3,3]

    def test_group_sum_batches_leading_axes(self):
        partition=make_partition([1,2,1,2])
        values=np.arange(8.0).reshape(2,4)
        np.testing.assert_allclose(partition.group_sum(values),[[2,4],[10,12]])

    def test_empty_membership_rejected(self):
        with pytest.raises(DimensionError):
            make_partition([])

    def test_perfect_partition_support(self):
        partition=perfect_partition(10,0.3)
        assert partition.indices(1).tolist()==[0,1,2]
        with pytest.raises(ConfigurationError):
            perfect_partition(10,0.05)


class TestCost:

    def test_zero_beta(self):
        instance=make_problem_instance(np.eye(2),[3.0,4.0],make_partition([1,1]),lam=1.0,gamma=0.5)
        assert cost(instance,np.zeros(2))==pytest.approx(12.5)

    def test_matches_summation(self):
        rng=np.random.default_rng(4)
        design=rng.standard_normal((3,4))
        response=rng.standard_normal(3)
        membership=[1,1,2,2]
        beta=rng.standard_normal(4)
        instance=make_problem_instance(design,response,make_partition(membership),lam=0.7,gamma=0.3)
        assert cost(instance,beta)==pytest.approx(_loop_cost(design,response,membership,beta,0.7,0.3),rel=1e-12)

    def test_gamma_one_is_lasso(self):
        rng=np.random.default_rng(5)
        design=rng.standard_normal((5,3))
        response=rng.standard_normal(5)
        beta=rng.standard_normal(3)
        instance=make_problem_instance(design,response,make_partition([1,1,1]),lam=2.0,gamma=1.0)
        expected=0.5*np.sum((response-design@beta)**2)+2.0*np.sum(np.abs(beta))
        assert cost(instance,beta)==pytest.approx(expected,rel=1e-12)

    def test_convex_along_segments(self):
        rng=np.random.default_rng(6)
        instance=make_problem_instance(rng.standard_normal((6,8)),rng.standard_normal(6),
                                       make_partition([1,1,2,2,2,3,4,4]),lam=0.8,gamma=0.4)
        for _ in range(200):
            a,b=rng.standard_normal(8),rng.standard_normal(8)
            weight=rng.random()
            mixed=cost(instance,weight*a+(1-weight)*b)
            assert mixed<=weight*cost(instance,a)+(1-weight)*cost(instance,b)+1e-10

    def test_cost_at_truth(self):
        design_spec=make_design_spec(GAUSSIAN_IID,40,60)
        prior=make_prior_spec(BERNOULLI_GAUSSIAN,epsilon=0.3,sd=2.0,noise_sd=0.5)
        instance=generate_instance(design_spec,prior,make_partition(np.repeat(np.arange(12),5)),lam=0.3,gamma=0.5,
                                   group_mode=MIXED_GROUPS,seed=2)
        beta0,noise=instance.truth
        expected=0.5*noise@noise+penalty(beta0,instance.partition,0.3,0.5)
        assert cost(instance,beta0)==pytest.approx(expected,rel=1e-10)

    def test_wrong_length(self):
        instance=make_problem_instance(np.eye(2),[1.0,1.0],make_partition([1,2]),lam=1.0,gamma=0.5)
        with pytest.raises(DimensionError):
            cost(instance,np.zeros(3))


class TestInstanceValidation:

    def test_response_length(self):
        with pytest.raises(DimensionError):
            make_problem_instance(np.eye(3),np.ones(2),make_partition([1,1,1]),lam=1.0,gamma=0.5)

    def test_partition_length(self):
        with pytest.raises(DimensionError):
            make_problem_instance(np.eye(3),np.ones(3),make_partition([1,1]),lam=1.0,gamma=0.5)

    @pytest.mark.parametrize("lam,gamma",[(-1.0,0.5),(1.0,1.5)])
    def test_parameter_ranges(self,lam,gamma):
        with pytest.raises(ConfigurationError):
            make_problem_instance(np.eye(2),np.ones(2),make_partition([1,1]),lam=lam,gamma=gamma)

    def test_negative_lambda_in_with_lambda(self,tiny_instance):
        with pytest.raises(ConfigurationError):
            tiny_instance.with_lambda(-0.1)


class TestGeneration:

    def _generate(self,seed,group_mode=MIXED_GROUPS,partition=None,prior=None,design=None):
        design=design or make_design_spec(GAUSSIAN_IID,30,50)
        prior=prior or make_prior_spec(POINT_MASS,epsilon=0.2,value=1.0,noise_sd=0.1)
        return generate_instance(design,prior,partition,lam=1.0,gamma=0.5,group_mode=group_mode,seed=seed)

    def test_reproducible(self):
        first,second=self._generate(9),self._generate(9)
        np.testing.assert_array_equal(first.design,second.design)
        np.testing.assert_array_equal(first.response,second.response)
        np.testing.assert_array_equal(first.truth.beta0,second.truth.beta0)
        assert not np.array_equal(first.design,self._generate(10).design)

    def test_null_instance(self):
        instance=self._generate(1,prior=make_prior_spec(ZERO_SIGNAL))
        assert np.all(instance.response==0)

    def test_point_mass_signal(self):
        instance=generate_instance(make_design_spec(GAUSSIAN_IID,500,2000),
                                   make_prior_spec(POINT_MASS,epsilon=0.2,value=5.0),None,lam=2.0,gamma=0.5,
                                   group_mode=MIXED_GROUPS,seed=0)
        beta0=instance.truth.beta0
        assert set(np.unique(beta0).tolist())<={0.0,5.0}
        assert abs(np.mean(beta0!=0)-0.2)<0.03
        np.testing.assert_allclose(instance.response,instance.design@beta0)

    def test_perfect_mode_support_is_group_one(self):
        prior=make_prior_spec(POINT_MASS,epsilon=0.4,value=1.0)
        instance=self._generate(3,group_mode=PERFECT_GROUPS,prior=prior)
        beta0=instance.truth.beta0
        assert instance.partition.n_groups==2
        assert np.all(beta0[instance.partition.indices(1)]==1.0)
        assert np.all(beta0[instance.partition.indices(2)]==0.0)

    def test_perfect_mode_needs_two_groups(self):
        with pytest.raises(ConfigurationError):
            self._generate(3,group_mode=PERFECT_GROUPS,partition=make_partition(np.arange(50)%3))

    def test_perfect_mode_needs_signal(self):
        with pytest.raises(ConfigurationError):
            self._generate(3,group_mode=PERFECT_GROUPS,partition=make_partition(np.arange(50)%2),
                           prior=make_prior_spec(ZERO_SIGNAL))


class TestDesigns:

    def test_bernoulli_entries(self):
        n,p=200,2000
        design=sample_design(make_design_spec(BERNOULLI_PM1,n,p),np.random.default_rng(0))
        np.testing.assert_allclose(np.abs(design),1/np.sqrt(n))
        signs=np.sign(design)
        assert abs(signs.mean())<4/np.sqrt(n*p)

    def test_shifted_exponential_moments(self):
        n,p=100,1000
        design=sample_design(make_design_spec(SHIFTED_EXPONENTIAL,n,p),np.random.default_rng(0))*np.sqrt(n)
        assert design.min()>=-1-1e-12
        assert abs(design.mean())<0.02
        assert abs(design.var()-1)<0.05

    def test_gaussian_column_scale(self):
        n,p=400,1000
        design=sample_design(make_design_spec(GAUSSIAN_IID,n,p),np.random.default_rng(1))
        assert np.mean(np.sum(design**2,axis=0))==pytest.approx(1.0,abs=0.02)

    def test_rotationally_invariant_spectrum(self):
        n,p=40,80
        design=sample_design(make_design_spec(ROT_INVARIANT,n,p,condition_number=10.0),np.random.default_rng(2))
        singular=np.linalg.svd(design,compute_uv=False)
        assert singular.max()/singular.min()==pytest.approx(10.0,rel=1e-8)
        assert np.sum(design**2)==pytest.approx(p,rel=1e-10)


class TestBundle:

    def test_round_trip(self,tmp_path):
        instance=generate_instance(make_design_spec(GAUSSIAN_IID,12,20),
                                   make_prior_spec(BERNOULLI_GAUSSIAN,epsilon=0.5,noise_sd=0.2),
                                   make_partition(np.repeat([5,9,2,7],5)),lam=0.4,gamma=0.25,
                                   group_mode=MIXED_GROUPS,seed=8)
        bundle_dir=save_instance(instance,str(tmp_path/"bundle"))
        for file_name in (BUNDLE_DESIGN_FILE_NAME,BUNDLE_RESPONSE_FILE_NAME,BUNDLE_GROUPS_FILE_NAME,
                          BUNDLE_META_FILE_NAME,BUNDLE_BETA0_FILE_NAME,BUNDLE_NOISE_FILE_NAME):
            assert os.path.exists(os.path.join(bundle_dir,file_name))
        loaded=load_instance(bundle_dir)
        np.testing.assert_array_equal(loaded.design,instance.design)
        np.testing.assert_array_equal(loaded.response,instance.response)
        np.testing.assert_array_equal(loaded.partition.original_membership(),instance.partition.original_membership())
        np.testing.assert_array_equal(loaded.truth.beta0,instance.truth.beta0)
        assert (loaded.lam,loaded.gamma,loaded.seed)==(0.4,0.25,8)
        assert loaded.sigma_w==pytest.approx(0.2)

    def test_text_matrix_fallback(self,tmp_path):
        file_path=tmp_path/"design.mat"
        file_path.write_text("1,2,3\n4,5,6\n")
        np.testing.assert_array_equal(load_matrix(str(file_path)),[[1,2,3],[4,5,6]])

    def test_missing_meta(self,tmp_path):
        with pytest.raises(ConfigurationError):
            load_instance(str(tmp_path))
