import math

import numpy as np
import pytest

from wittenlab.errors import InputError
from wittenlab.svtoolkit import (MULTADD_SLACK, Subspace, TauBudget, check_additive, check_eps_orthogonal_blocks,
                                 check_eps_orthonormal_bases, check_factorization, check_multadd,
                                 check_projected_sv, check_split_off, check_unitary_chain,
                                 decomposition_gram_defect, eps_unitary_defect, image_lemma_values,
                                 multadd_instance, multadd_sweep, random_eps_unitary, random_graded,
                                 sym_d, tau, vec_d)
from wittenlab.svsuite import run_suites


def line(theta):
    return Subspace(np.array([[math.cos(theta)], [math.sin(theta)]]))


def test_vec_d_examples():
    e1 = line(0.0)
    assert vec_d(e1, e1) == 0.0
    assert vec_d(e1, line(math.pi / 2)) == pytest.approx(1.0)
    for th in (0.1, 0.7, 2.5):
        assert vec_d(e1, line(th)) == pytest.approx(abs(math.sin(th)), abs=1e-15)


def test_vec_d_is_zero_on_inclusion_and_asymmetric(rng):
    F = Subspace.random(6, 3, rng)
    E = Subspace(F.frame[:, :1])
    assert vec_d(E, F) < 1e-15
    assert vec_d(F, E) == pytest.approx(1.0)
    with pytest.raises(InputError):
        vec_d(E, Subspace.random(5, 1, rng))


def test_vec_d_triangle(rng):
    for _ in range(200):
        E, F, G = (Subspace.random(7, int(rng.integers(1, 5)), rng) for _ in range(3))
        assert vec_d(E, G) <= vec_d(E, F) + vec_d(F, G) + 1e-12


def test_subspace_rejects_non_orthonormal_frames():
    with pytest.raises(InputError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_tau_examples():
    assert tau() == 1.0
    assert tau(0.5) == pytest.approx(3.0)
    assert tau(0.1, 0.1) == pytest.approx((1.1 / 0.9) ** 2)
    assert TauBudget((0.1, 0.1)).value() == pytest.approx(1.4938271604938)
    with pytest.raises(InputError):
        tau(1.0)
    with pytest.raises(InputError):
        TauBudget((0.2, -0.1))


def test_eps_unitary_defect_examples(rng):
    assert eps_unitary_defect(np.eye(3)) == 0.0
    c, s = math.cos(0.4), math.sin(0.4)
    assert eps_unitary_defect(math.sqrt(1.1) * np.array([[c, -s], [s, c]])) == pytest.approx(0.1)
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0] + 1e-3 * rng.standard_normal((5, 5))
    gram = max(np.linalg.norm(Q.T @ Q - np.eye(5), 2), np.linalg.norm(Q @ Q.T - np.eye(5), 2))
    assert eps_unitary_defect(Q) == pytest.approx(gram, rel=1e-12)


def test_projected_identity_triple(rng):
    F = Subspace.random(6, 4, rng)
    rep = check_projected_sv(rng.standard_normal((6, 6)), F, F, F)
    assert rep.passed
    assert rep.ratios == pytest.approx([1.0] * len(rep.ratios), abs=1e-12)


def test_projected_eps1_point_three(rng):
    F = Subspace.random(8, 3, rng)
    E = F.tilted(math.asin(0.15), rng)
    rep = check_projected_sv(rng.standard_normal((8, 8)), E, F, F)
    assert rep.eps[0] == pytest.approx(0.3)
    assert rep.passed
    assert max(max(rep.ratios), 1 / min(rep.ratios)) <= math.sqrt(tau(0.09)) * (1 + 1e-12)


def test_projected_reports_violated_hypothesis(rng):
    F = Subspace.random(4, 2, rng)
    rep = check_projected_sv(np.eye(4), F.complement(), F, F)
    assert not rep.hypothesis_ok and "hypothesis" in rep.diagnosis


def test_eps_orthonormal_bases(rng):
    Phi = random_eps_unitary(5, 5, 0.2, rng)
    Psi = random_eps_unitary(4, 4, 0.1, rng)
    assert check_eps_orthonormal_bases(random_graded(4, 5, rng), Phi, Psi).passed


def test_orthogonal_blocks_exact(rng):
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    E1, E2 = Subspace(Q[:, :2]), Subspace(Q[:, 2:])
    B = rng.standard_normal((5, 5))
    # choose the target decomposition as the images
    F1 = Subspace.span(B @ E1.frame)
    F2 = F1.complement()
    B = B - F2.projector @ B @ E1.projector
    B = B - F1.projector @ B @ E2.projector
    rep = check_eps_orthogonal_blocks(B, E1, E2, F1, F2)
    assert rep.passed and rep.eps == pytest.approx((0.0, 0.0), abs=1e-12)


def test_split_off(rng):
    E1 = Subspace.random(6, 2, rng)
    E2 = E1.complement()
    B = 10 * rng.standard_normal((6, 6))
    B[:, :] = B @ E1.projector + 0.01 * rng.standard_normal((6, 6)) @ E2.projector
    assert check_split_off(B, E1, E2).passed


def test_unitary_chain(rng):
    rep = check_unitary_chain(random_eps_unitary(4, 4, 0.3, rng), rng.standard_normal((4, 3)),
                              random_eps_unitary(3, 3, 0.2, rng))
    assert rep.ii_holds and rep.passed
    assert rep.eps1 <= 0.3 + 1e-12


def test_image_lemma(rng):
    v = image_lemma_values(random_eps_unitary(4, 4, 0.25, rng))
    assert v["gram_defect"] == pytest.approx(v["abs_defect"], abs=1e-12)
    assert v["gram_defect"] == pytest.approx(v["unitary_defect"], abs=1e-12)
    assert v["onto"]
    a, b = decomposition_gram_defect(line(0.0), line(1.2))
    assert a == pytest.approx(b) == pytest.approx(math.cos(1.2))


def test_additive_examples(rng):
    B = rng.standard_normal((5, 4))
    same = check_additive(B, B, 2)
    assert same.passed and max(same.ratios) == 0.0
    eps = 1e-3
    Bp = B + eps * np.eye(5, 4)
    rep = check_additive(B, Bp, 2)
    assert rep.passed and max(rep.ratios) <= eps + 1e-15
    with pytest.raises(InputError):
        check_additive(B, B.T)


def test_factorization_g_equals_f(rng):
    B, E1, E2, F, G, C = multadd_instance(1e-2, rng)
    rep = check_factorization(B, E1, F, F, C)
    assert rep.hypothesis_ok and rep.passed and rep.R_norm < 1e-14


def test_factorization_small_rotation(rng):
    B, E1, E2, F, G, C = multadd_instance(1e-2, rng)
    rep = check_factorization(B, E1, F, G, C)
    assert rep.passed and 0 < rep.R_norm <= rep.bound


def test_factorization_rejects_bad_hypothesis(rng):
    B, E1, E2, F, G, C = multadd_instance(1e-2, rng)
    rep = check_factorization(B, E1, F, G, np.eye(B.shape[0]))
    assert not rep.hypothesis_ok


def test_multadd_trivial(rng):
    Q = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    F = Subspace(Q[:, :3])
    BF = np.diag([2.0, 1.0, 0.0])
    B = F.frame @ BF @ F.frame.T
    E1, E2 = Subspace(F.frame[:, :2]), Subspace(F.frame[:, 2:])
    rep = check_multadd(B, E1, E2, F, F, np.eye(6), 1e-3)
    assert rep.hypothesis_ok and rep.passed
    assert max(rep.rel_gaps) < 1e-14 and rep.next_ratio < 1e-15


def test_multadd_constructed_instance(rng):
    rho = 1e-3
    rep = check_multadd(*multadd_instance(rho, rng), rho)
    assert rep.hypothesis_ok and rep.passed
    assert max(rep.rel_gaps) <= MULTADD_SLACK * rho


def test_multadd_sweep_is_first_order(rng):
    sw = multadd_sweep([1e-1, 1e-2, 1e-3, 1e-4], rng)
    assert sw.passed
    assert sw.slope >= 0.8
    assert sw.next_slope >= 1.5
    with pytest.raises(InputError):
        multadd_sweep([1e-2], rng)


def test_suite_small_run():
    out = run_suites(trials=50, seed=3)
    for name, r in out.items():
        assert r["violations"] == 0, name
