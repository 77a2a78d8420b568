import numpy as np
import pytest

from scenefactor.edge_classifier import EdgeClassifierGNN
from scenefactor.estimator import (BaseEstimator, NotFittedError,
                                   check_is_fitted, check_planes,
                                   check_random_state)
from scenefactor.generator import GeneratorConfig, build_sample
from scenefactor.geometry import plane_from_segment
from scenefactor.origin_regressor import OriginRegressorGNN


def tiny_samples(n=4):
    cfg = GeneratorConfig(seed=13, voxels_xy_range=(12, 12),
                          voxel_size_m=(0.2, 0.2), l_shape_prob=0.0,
                          plane_dropout=0.0)
    return [build_sample(cfg, i) for i in range(n)]


class TestBaseEstimator:
    def test_get_set_params_round_trip(self):
        est = EdgeClassifierGNN(hidden=32, epochs=3)
        params = est.get_params()
        assert params["hidden"] == 32 and params["epochs"] == 3
        est.set_params(lr=5e-4)
        assert est.get_params()["lr"] == 5e-4

    def test_invalid_param_rejected(self):
        with pytest.raises(ValueError):
            EdgeClassifierGNN().set_params(bogus=1)

    def test_repr_contains_params(self):
        assert "hidden=64" in repr(OriginRegressorGNN())


class TestValidation:
    def test_check_planes_list_to_dict(self):
        p = plane_from_segment((0, 0), (1, 0), (0.5, 1))
        out = check_planes([p, p])
        assert sorted(out) == [0, 1]

    def test_check_planes_type_error(self):
        with pytest.raises(TypeError):
            check_planes({0: "not a plane"})

    def test_check_planes_min_count(self):
        with pytest.raises(ValueError):
            check_planes({}, min_planes=1)

    def test_check_random_state(self):
        g = np.random.default_rng(0)
        assert check_random_state(g) is g
        assert isinstance(check_random_state(7), np.random.Generator)


class TestEdgeClassifierEstimator:
    def test_unfitted_predict_raises(self):
        est = EdgeClassifierGNN()
        sample = tiny_samples(1)[0]
        with pytest.raises(NotFittedError):
            est.predict(sample.observed)

    def test_fit_predict(self):
        samples = tiny_samples()
        est = EdgeClassifierGNN(epochs=5, random_state=0).fit(samples)
        out = est.predict(samples[0].observed)
        assert out
        assert all(v in ("none", "same_room", "same_wall")
                   for v in out.values())
        proba = est.predict_proba(samples[0].observed)
        assert proba.keys() == out.keys()

    def test_same_seed_same_model(self):
        samples = tiny_samples()
        a = EdgeClassifierGNN(epochs=3, random_state=5).fit(samples)
        b = EdgeClassifierGNN(epochs=3, random_state=5).fit(samples)
        for pa, pb in zip(a.model_.params(), b.model_.params()):
            assert np.array_equal(pa.data, pb.data)


class TestOriginRegressorEstimator:
    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            OriginRegressorGNN().predict([])

    def test_fit_predict(self):
        sample = tiny_samples(1)[0]
        planes = list(sample.observed.values())
        target = np.asarray(sample.rooms[0].origin)
        est = OriginRegressorGNN(epochs=50, patience=50,
                                 random_state=1).fit([(planes, target)])
        pred = est.predict(planes)
        assert pred.xy.shape == (2,)
