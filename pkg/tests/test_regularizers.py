"""Penalty values, prox maps, model geometry and membership verdicts."""

import numpy as np
import pytest

from partlysmooth import (
    AnalysisL1,
    GroupL1L2,
    L1,
    ModelDescriptor,
    Nuclear,
    Subspace,
    project,
    same_model,
    subspace_distance,
)
from partlysmooth.regularizers import from_config

import oracles


def all_regularizers():
    return [
        L1(),
        GroupL1L2([[0, 1], [2, 3], [4, 5]]),
        Nuclear((3, 3)),
        AnalysisL1(oracles.tv_operator(6)),
    ]


def dim_of(reg):
    # L1 works in any dimension; the others carry theirs
    return getattr(reg, "p", 6)


def random_point(reg, rng):
    return rng.normal(0.0, 2.0, dim_of(reg))


# ---------------------------------------------------------------------------
# values


def test_l1_value():
    assert L1().value([3.0, -0.5, 0.0]) == pytest.approx(3.5)
    assert L1().value(np.zeros(4)) == 0.0


def test_group_value():
    reg = GroupL1L2([[0, 1], [2]])
    assert reg.value([3.0, 4.0, -2.0]) == pytest.approx(7.0)


def test_nuclear_value():
    reg = Nuclear((2, 2))
    assert reg.value(np.diag([2.0, 1.0]).ravel(order="F")) == pytest.approx(3.0)
    # singular values do not care about where the mass sits
    m = np.array([[0.0, 2.0], [1.0, 0.0]])
    assert reg.value(m.ravel(order="F")) == pytest.approx(3.0)


def test_analysis_value():
    d = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    reg = AnalysisL1(d)
    assert reg.value([2.0, 2.0, 5.0]) == pytest.approx(3.0)


def test_value_positive_homogeneity():
    rng = np.random.default_rng(10)
    for reg in all_regularizers():
        for _ in range(25):
            beta = random_point(reg, rng)
            c = float(rng.uniform(0.1, 10.0))
            assert reg.value(c * beta) == pytest.approx(c * reg.value(beta), rel=1e-10)
            assert reg.value(beta) >= 0.0
        assert reg.value(np.zeros(dim_of(reg))) == 0.0


# ---------------------------------------------------------------------------
# prox maps


def test_l1_prox_example():
    np.testing.assert_allclose(L1().prox([3.0, -0.5, 0.0], 1.0), [2.0, 0.0, 0.0])


def test_group_prox_example():
    reg = GroupL1L2([[0, 1]])
    np.testing.assert_allclose(reg.prox([3.0, 4.0], 1.0), [2.4, 3.2], atol=1e-12)


def test_group_prox_kills_small_blocks():
    reg = GroupL1L2([[0, 1], [2]])
    out = reg.prox([0.3, 0.4, 2.0], 1.0)
    np.testing.assert_allclose(out, [0.0, 0.0, 1.0], atol=1e-12)


def test_nuclear_prox_example():
    reg = Nuclear((2, 2))
    out = reg.prox(np.diag([3.0, 1.0]).ravel(order="F"), 2.0)
    np.testing.assert_allclose(out, np.diag([1.0, 0.0]).ravel(order="F"), atol=1e-12)


def test_analysis_prox_example():
    d = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    reg = AnalysisL1(d)
    out = reg.prox([3.0, 1.0, -2.0], 0.5)
    np.testing.assert_allclose(out, [2.5, 1.0, -1.5], atol=1e-8)


def test_analysis_prox_matches_enumeration():
    d = oracles.tv_operator(4)
    reg = AnalysisL1(d)
    rng = np.random.default_rng(11)
    for _ in range(20):
        beta = rng.normal(0.0, 2.0, 4)
        gamma = float(rng.uniform(0.1, 1.5))
        expected = oracles.analysis_prox_enumerated(d, beta, gamma)
        np.testing.assert_allclose(reg.prox(beta, gamma), expected, atol=1e-7)


def test_prox_gamma_zero_is_identity():
    rng = np.random.default_rng(12)
    for reg in all_regularizers():
        beta = random_point(reg, rng)
        np.testing.assert_allclose(reg.prox(beta, 0.0), beta, atol=1e-12)


def test_prox_rejects_negative_gamma():
    for reg in all_regularizers():
        with pytest.raises(ValueError):
            reg.prox(np.zeros(dim_of(reg)), -0.1)


def test_prox_nonexpansive():
    rng = np.random.default_rng(13)
    for reg in all_regularizers():
        for _ in range(50):
            a = random_point(reg, rng)
            b = random_point(reg, rng)
            gamma = float(rng.uniform(0.05, 3.0))
            dist = np.linalg.norm(reg.prox(a, gamma) - reg.prox(b, gamma))
            assert dist <= np.linalg.norm(a - b) + 1e-9


def test_prox_against_generic_minimizer():
    # derivative-free minimization as an implementation-independent check;
    # Powell stalls on larger nonsmooth problems, so the assertion is
    # one-sided: the implementation must reach at least as low an objective
    rng = np.random.default_rng(14)
    for reg in all_regularizers():
        for _ in range(3):
            beta = random_point(reg, rng)
            gamma = float(rng.uniform(0.2, 1.0))

            def obj(x):
                return 0.5 * np.sum((x - beta) ** 2) + gamma * reg.value(x)

            ref = oracles.prox_reference(reg.value, beta, gamma)
            got = reg.prox(beta, gamma)
            assert obj(got) <= obj(ref) + 1e-8
            # and when Powell does converge the points must agree
            if obj(ref) <= obj(got) + 1e-10:
                np.testing.assert_allclose(got, ref, atol=1e-4)


# ---------------------------------------------------------------------------
# models


def test_l1_model():
    geo = L1().model(np.array([1.0, -2.0, 0.0]))
    assert geo.descriptor == ModelDescriptor("l1", (0, 1))
    assert geo.subspace.dim == 2
    np.testing.assert_allclose(geo.model_vector, [1.0, -1.0, 0.0])
    assert geo.offset is None


def test_l1_model_zero_point():
    geo = L1().model(np.zeros(3))
    assert geo.descriptor.data == ()
    assert geo.subspace.dim == 0
    np.testing.assert_allclose(geo.model_vector, np.zeros(3))


def test_l1_zero_tol_threshold():
    desc = L1().descriptor(np.array([1.0, 1e-9]), zero_tol=1e-8)
    assert desc.data == (0,)
    desc = L1().descriptor(np.array([1.0, 1e-9]), zero_tol=1e-10)
    assert desc.data == (0, 1)


def test_group_model():
    reg = GroupL1L2([[0, 1], [2]])
    geo = reg.model(np.array([3.0, 4.0, 0.0]))
    assert geo.descriptor == ModelDescriptor("group_l1l2", (0,))
    assert geo.subspace.dim == 2
    np.testing.assert_allclose(geo.model_vector, [0.6, 0.8, 0.0])


def test_nuclear_model():
    reg = Nuclear((2, 2))
    geo = reg.model(np.diag([5.0, 0.0]).ravel(order="F"))
    assert geo.descriptor == ModelDescriptor("nuclear", 1)
    # fixed-rank tangent space dimension p0^2 - (p0 - r)^2
    assert geo.subspace.dim == 3
    np.testing.assert_allclose(
        np.abs(geo.model_vector), np.abs(np.diag([1.0, 0.0]).ravel(order="F")), atol=1e-12
    )
    mat = geo.model_vector.reshape(2, 2, order="F")
    # e and beta share their rank-one direction
    assert mat[0, 0] * 5.0 > 0


def test_nuclear_tangent_dimension():
    rng = np.random.default_rng(15)
    for p0, r in [(3, 1), (4, 2), (5, 0), (4, 4)]:
        reg = Nuclear((p0, p0))
        a = rng.normal(size=(p0, r)) @ rng.normal(size=(r, p0)) if r else np.zeros((p0, p0))
        geo = reg.model(a.ravel(order="F"))
        assert geo.descriptor.data == np.linalg.matrix_rank(a)
        assert geo.subspace.dim == p0 * p0 - (p0 - geo.descriptor.data) ** 2


def test_analysis_model():
    d = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    reg = AnalysisL1(d)
    geo = reg.model(np.array([2.0, 2.0, 5.0]))
    assert geo.descriptor == ModelDescriptor("analysis_l1", (0,))
    assert geo.subspace.dim == 2
    np.testing.assert_allclose(geo.model_vector, [-0.5, -0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(geo.offset, [0.0, -1.0, 1.0], atol=1e-12)


def test_analysis_model_constant_vector():
    # every difference vanishes: T is the kernel of the full operator
    reg = AnalysisL1(oracles.tv_operator(5))
    geo = reg.model(np.full(5, 3.0))
    assert geo.descriptor.data == (0, 1, 2, 3)
    assert geo.subspace.dim == 1
    np.testing.assert_allclose(np.abs(geo.subspace.basis[:, 0]), np.full(5, 1 / np.sqrt(5)))


def test_model_vector_lies_in_tangent():
    rng = np.random.default_rng(16)
    for reg in all_regularizers():
        for _ in range(20):
            beta = reg.prox(random_point(reg, rng), float(rng.uniform(0.1, 1.0)))
            geo = reg.model(beta)
            np.testing.assert_allclose(
                project(geo.model_vector, geo.subspace), geo.model_vector, atol=1e-8
            )
            assert same_model(geo.descriptor, reg.descriptor(beta))


def test_same_model_mixed_kinds():
    with pytest.raises(ValueError):
        same_model(ModelDescriptor("l1", (0,)), ModelDescriptor("nuclear", 1))


# ---------------------------------------------------------------------------
# membership verdicts


def test_l1_membership():
    reg = L1()
    geo = reg.model(np.array([1.0, -2.0, 0.0]))
    v = reg.ri_membership(geo, [1.0, -1.0, 0.4])
    assert v.status == "interior"
    assert v.margin == pytest.approx(0.6)
    assert v.tangent_residual == pytest.approx(0.0, abs=1e-14)

    v = reg.ri_membership(geo, [1.0, -1.0, 1.0])
    assert v.status == "boundary"
    v = reg.ri_membership(geo, [1.0, -1.0, 1.5])
    assert v.status == "outside" and v.margin == pytest.approx(-0.5)
    # tangent equation failure dominates the margin
    v = reg.ri_membership(geo, [0.5, -1.0, 0.0])
    assert v.status == "outside"
    assert v.tangent_residual == pytest.approx(0.5)


def test_group_membership():
    reg = GroupL1L2([[0, 1], [2]])
    geo = reg.model(np.array([3.0, 4.0, 0.0]))
    v = reg.ri_membership(geo, [0.6, 0.8, 0.3])
    assert v.status == "interior" and v.margin == pytest.approx(0.7)
    v = reg.ri_membership(geo, [0.5, 0.8, 0.3])
    assert v.status == "outside"
    assert v.tangent_residual == pytest.approx(0.1)


def test_nuclear_membership():
    reg = Nuclear((2, 2))
    geo = reg.model(np.diag([5.0, 0.0]).ravel(order="F"))
    v = reg.ri_membership(geo, np.diag([1.0, 0.3]).ravel(order="F"))
    assert v.status == "interior"
    assert v.margin == pytest.approx(0.7)
    v = reg.ri_membership(geo, np.diag([1.0, 1.4]).ravel(order="F"))
    assert v.status == "outside" and v.margin == pytest.approx(-0.4)


def test_analysis_membership():
    d = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    reg = AnalysisL1(d)
    geo = reg.model(np.array([2.0, 2.0, 5.0]))
    v = reg.ri_membership(geo, geo.model_vector)
    assert v.status == "interior"
    assert v.margin == pytest.approx(0.5, abs=1e-9)
    v = reg.ri_membership(geo, d @ np.array([1.5, 1.0]))
    assert v.status == "outside"
    assert v.margin == pytest.approx(-0.5, abs=1e-9)


def test_analysis_membership_empty_cosupport():
    reg = AnalysisL1(oracles.tv_operator(4))
    geo = reg.model(np.array([1.0, 2.0, 4.0, 8.0]))
    assert geo.descriptor.data == ()
    v = reg.ri_membership(geo, geo.model_vector)
    assert v.status == "interior" and v.margin == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# validation and construction


def test_group_partition_validation():
    with pytest.raises(ValueError):
        GroupL1L2([[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        GroupL1L2([[0], [2]])
    with pytest.raises(ValueError):
        GroupL1L2([[0], []])
    with pytest.raises(ValueError):
        GroupL1L2([[-1, 0]])
    with pytest.raises(ValueError):
        GroupL1L2([])


def test_nuclear_shape_validation():
    with pytest.raises(ValueError):
        Nuclear((2, 3))
    with pytest.raises(ValueError):
        Nuclear((0, 0))
    with pytest.raises(ValueError):
        Nuclear((2,))
    reg = Nuclear((2, 2))
    with pytest.raises(ValueError):
        reg.value(np.zeros(3))


def test_analysis_operator_validation():
    with pytest.raises(ValueError):
        AnalysisL1(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        AnalysisL1(np.array([1.0, 2.0]))


def test_vector_validation():
    reg = L1()
    with pytest.raises(ValueError):
        reg.value(np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        reg.prox(np.array([np.inf, 0.0]), 1.0)


# ---------------------------------------------------------------------------
# singleton-group and identity-operator reductions


def test_singleton_groups_reduce_to_l1():
    p = 7
    group = GroupL1L2([[i] for i in range(p)])
    l1 = L1()
    rng = np.random.default_rng(17)
    for _ in range(20):
        beta = rng.normal(0.0, 2.0, p)
        gamma = float(rng.uniform(0.1, 2.0))
        assert group.value(beta) == pytest.approx(l1.value(beta), abs=1e-12)
        np.testing.assert_allclose(group.prox(beta, gamma), l1.prox(beta, gamma), atol=1e-12)
        thresholded = l1.prox(beta, gamma)
        assert group.descriptor(thresholded).data == l1.descriptor(thresholded).data


def test_identity_analysis_reduces_to_l1():
    p = 6
    an = AnalysisL1(np.eye(p))
    l1 = L1()
    rng = np.random.default_rng(18)
    for _ in range(10):
        beta = rng.normal(0.0, 2.0, p)
        gamma = float(rng.uniform(0.1, 2.0))
        assert an.value(beta) == pytest.approx(l1.value(beta), abs=1e-12)
        np.testing.assert_allclose(an.prox(beta, gamma), l1.prox(beta, gamma), atol=1e-6)
        point = l1.prox(beta, gamma)
        support = set(l1.descriptor(point).data)
        cosupport = set(an.descriptor(point).data)
        assert cosupport == set(range(p)) - support
        geo_a, geo_l = an.model(point), l1.model(point)
        assert subspace_distance(geo_a.subspace, geo_l.subspace) < 1e-10
        np.testing.assert_allclose(geo_a.model_vector, geo_l.model_vector, atol=1e-10)


# ---------------------------------------------------------------------------
# config round trips


def test_config_round_trips():
    for reg in all_regularizers():
        clone = from_config(reg.to_config())
        assert clone.kind == reg.kind
        rng = np.random.default_rng(19)
        beta = rng.normal(size=dim_of(reg))
        assert clone.value(beta) == pytest.approx(reg.value(beta), abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        from_config({})
    with pytest.raises(ValueError):
        from_config({"kind": "huber"})
    with pytest.raises(ValueError):
        from_config({"kind": "group_l1l2"})
    with pytest.raises(ValueError):
        from_config({"kind": "nuclear"})
    with pytest.raises(ValueError):
        from_config({"kind": "analysis_l1"})
    with pytest.raises(ValueError):
        from_config({"kind": "analysis_l1", "operator": [[1.0]], "operator_shape": [2, 1]})
