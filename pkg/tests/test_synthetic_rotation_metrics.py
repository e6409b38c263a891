import io
import math

import numpy as np
import pytest
from scipy import stats

from obliquebart.metrics import accuracy, paired_one_sided_t, rmse, smse
from obliquebart.rotation import RandomRotation, RotationSpec, random_rotation, random_rotation_transform
from obliquebart.synthetic import (
    SyntheticSpec,
    gen_rotated_axes,
    gen_sinusoid,
    rotate,
    rotated_axes_f,
    sinusoid_f,
)


def test_rotated_axes_examples():
    assert rotated_axes_f(np.array([0.5, 0.5]), 0.0, 4.0) == 4.0
    assert rotated_axes_f(np.array([-0.5, 0.5]), 0.0, 4.0) == -4.0
    u = rotate(np.array([1.0, 0.0]), math.pi / 4)
    assert u == pytest.approx([math.sqrt(0.5), math.sqrt(0.5)], abs=1e-15)
    assert rotated_axes_f(np.array([1.0, 0.0]), math.pi / 4, 4.0) == 4.0


def test_sinusoid_examples():
    assert sinusoid_f(np.array([0.3, 0.0]), 0.0, 2.0) == -2.0
    assert sinusoid_f(np.array([0.3, 0.1]), 0.0, 2.0) == 2.0
    assert sinusoid_f(np.array([0.0, 0.5]), 0.7, 2.0) == 2.0
    assert sinusoid_f(np.array([math.pi / 20, 0.5]), 1.0, 2.0) == -2.0


def test_synthetic_parameter_ranges():
    with pytest.raises(ValueError):
        SyntheticSpec("rotated-axes", 1.0)
    with pytest.raises(ValueError):
        SyntheticSpec("sinusoid", 1.5)
    with pytest.raises(ValueError):
        SyntheticSpec("circle")
    with pytest.raises(ValueError):
        gen_sinusoid(SyntheticSpec("rotated-axes"))


def test_generator_deterministic_and_noise():
    spec = SyntheticSpec("rotated-axes", math.pi / 8, 2.0, 2000, 5)
    (t1, f1), (t2, _) = gen_rotated_axes(spec), gen_rotated_axes(spec)
    b1, b2 = io.StringIO(), io.StringIO()
    t1.to_csv(b1)
    t2.to_csv(b2)
    assert b1.getvalue() == b2.getvalue()
    assert b1.getvalue().splitlines()[0] == "x1,x2,y"
    assert np.abs(t1.x_cont).max() <= 1
    assert set(np.unique(f1)) == {-2.0, 2.0}
    assert np.std(t1.y - f1) == pytest.approx(1.0, abs=0.05)


def test_rotation_orthogonal_det_one():
    rng = np.random.default_rng(0)
    for p in (2, 3, 5):
        q = random_rotation(p, rng)
        assert np.linalg.det(q) == pytest.approx(1.0, abs=1e-10)
        x = rng.standard_normal((100, p))
        assert np.allclose(np.linalg.norm(x @ q, axis=1), np.linalg.norm(x, axis=1), atol=1e-10)


def test_rotation_haar_first_entry():
    # Q[0, 0] of a Haar rotation in 3-D is the first coordinate of a uniform
    # point on the sphere, which is uniform on [-1, 1]
    rng = np.random.default_rng(1)
    vals = [random_rotation(3, rng)[0, 0] for _ in range(5000)]
    assert stats.kstest(vals, stats.uniform(-1, 2).cdf).pvalue > 0.001


def test_rotation_transform_shapes_and_identity():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, (50, 3))
    x[0], x[1] = -1, 1
    out, rot = random_rotation_transform(x, RotationSpec(R=4, seed=1))
    assert out.shape == (50, 12)
    assert np.allclose(out.min(axis=0), -1) and np.allclose(out.max(axis=0), 1)
    ident, _ = random_rotation_transform(x, RotationSpec(R=1), identity=True)
    assert np.allclose(ident, x, atol=1e-12)
    with pytest.raises(ValueError):
        RotationSpec(R=0)
    assert np.array_equal(rot.transform(x), out)
    assert isinstance(rot, RandomRotation)


def test_smse_examples():
    y = np.array([0.0, 2.0])
    assert smse(y, y, 1.0) == 0.0
    assert smse(y, np.array([1.0, 1.0]), 0.0) == 0.5
    rng = np.random.default_rng(3)
    yt = rng.standard_normal(20)
    assert smse(yt, np.full(20, 0.3), 0.3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        smse(np.array([1.0, 1.0]), np.array([0.0, 0.0]), 1.0)


def test_rmse_accuracy():
    assert rmse(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(math.sqrt(12.5))
    assert accuracy(np.array([1, 0, 1, 1]), np.array([1, 0, 1, 1])) == 1.0
    assert accuracy(np.array([1, 0]), np.array([0, 1])) == 0.0
    assert accuracy(np.array([1, 0, 1, 1]), np.array([1, 0, 0, 1])) == 0.75


def test_paired_t():
    same = paired_one_sided_t([1, 2, 3], [1, 2, 3])
    assert same.degenerate and same.pvalue == 0.5
    better = paired_one_sided_t([0, 0, 0, 0], [1, 1, 1, 1])
    assert better.degenerate and better.pvalue < 0.001
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal(10), rng.standard_normal(10)
    res = paired_one_sided_t(a, b)
    ref = stats.ttest_rel(a, b, alternative="less")
    assert res.pvalue == pytest.approx(ref.pvalue, rel=1e-10)
    assert paired_one_sided_t(b, a).pvalue == pytest.approx(1 - res.pvalue, rel=1e-10)
    near = paired_one_sided_t([0.0, 0.1, 0.0, 0.1], [1.0, 1.0, 1.0, 1.0])
    assert near.pvalue < 0.001
    with pytest.raises(ValueError):
        paired_one_sided_t([1.0], [2.0])
