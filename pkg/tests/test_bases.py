import numpy as np
import pytest

from fluxevans import systems
from fluxevans.bases import (
    KatoTransport, glancing_delta, glancing_model, kato_continue, split,
    _group_projector,
)
from fluxevans.errors import DiscontinuityError, SplittingError
from fluxevans.formulations import Frequency, build_integrated_1d
from fluxevans.profile import solve_profile


@pytest.fixture(scope="module")
def lagrangian():
    spec = systems.get("isentropic_lagrangian_1d")
    return spec, solve_profile(spec.model, *spec.default_shock[:2],
                               opts={"nodes": 800})


def test_split_glancing_delta_one():
    sp = split(glancing_model(1.0, 0.0, 0.0, lambda x: x))
    assert sp.k_stable == 1 and sp.k_unstable == 1
    assert sp.gap == pytest.approx(1.0)
    vs = sp.stable_basis[:, 0]
    vu = sp.unstable_basis[:, 0]
    assert abs(vs[1] / vs[0] + 1.0) < 1e-12   # direction (1, -1)
    assert abs(vu[1] / vu[0] - 1.0) < 1e-12   # direction (1, +1)
    assert sp.stable_eigs[0] == pytest.approx(-1.0)


def test_split_burgers_limit_quadratic_oracle(lagrangian_unused=None):
    # limit matrix [[0, 1], [lam, u_plus]] at lam = 1, u_plus = -1
    M = np.array([[0.0, 1.0], [1.0, -1.0]])
    sp = split(M)
    mu_s = (-1.0 - np.sqrt(5.0)) / 2.0
    mu_u = (-1.0 + np.sqrt(5.0)) / 2.0
    assert sp.stable_eigs[0] == pytest.approx(mu_s)
    assert sp.unstable_eigs[0] == pytest.approx(mu_u)


def test_split_jordan_rejected():
    with pytest.raises(SplittingError):
        split(glancing_model(0.0, 0.0, 0.0, lambda x: x))


def test_split_orthonormal_columns():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(5, 5)) + 0.3 * np.eye(5)
    sp = split(M)
    for Q in (sp.stable_basis, sp.unstable_basis):
        if Q.shape[1]:
            assert np.allclose(Q.conj().T @ Q, np.eye(Q.shape[1]), atol=1e-12)
    assert sp.k_stable + sp.k_unstable == 5


def test_group_projector_properties():
    rng = np.random.default_rng(7)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    eigs = np.linalg.eigvals(M)
    group = eigs[np.argsort(eigs.real)][:2]
    P, Q, g = _group_projector(M, group)
    assert np.linalg.norm(P @ P - P) < 1e-10
    assert np.linalg.norm(P @ Q - Q) < 1e-10
    # P commutes with M and has the right rank
    assert np.linalg.norm(P @ M - M @ P) < 1e-9
    assert round(np.real(np.trace(P))) == 2


def test_conjugation_symmetry(lagrangian):
    spec, prof = lagrangian
    lam = 0.8 + 0.6j
    Ap = build_integrated_1d(spec.model, prof, lam).limits[1]
    Ac = build_integrated_1d(spec.model, prof, np.conj(lam)).limits[1]
    assert np.allclose(Ac, np.conj(Ap), atol=1e-12)
    sp, sc = split(Ap), split(Ac)
    # subspaces conjugate: principal angles all zero
    s = np.linalg.svd(sc.stable_basis.conj().T @ np.conj(sp.stable_basis),
                      compute_uv=False)
    assert np.allclose(s, 1.0, atol=1e-10)


def _circle_path(center, radius, m, t0=0.0, t1=2 * np.pi):
    return [Frequency(center + radius * np.exp(1j * t))
            for t in np.linspace(t0, t1, m + 1)]


def test_kato_constant_path():
    M = np.array([[0.0, 1.0], [2.0, 0.0]])
    kb = kato_continue(lambda f: type("F", (), {"limits": (M, M)})(),
                       [Frequency(1.0)] * 5, "+", "stable")
    for R in kb.R[1:]:
        assert np.allclose(R, kb.R[0], atol=1e-14)


def test_kato_small_loop_returns(lagrangian):
    spec, prof = lagrangian
    build = lambda f: build_integrated_1d(spec.model, prof, f.lam)  # noqa: E731
    # reference: the same loop with 100x finer steps
    kb_fine = kato_continue(build, _circle_path(1.5, 0.5, 2400), "+", "stable")
    ref_defect = np.linalg.norm(kb_fine.R[-1] - kb_fine.R[0])
    kb = kato_continue(build, _circle_path(1.5, 0.5, 24), "+", "stable")
    defect = np.linalg.norm(kb.R[-1] - kb.R[0])
    # trivial holonomy: both return to the start; coarse within O(step^2)
    step = 2 * np.pi * 0.5 / 24
    assert defect <= ref_defect + step ** 2


def test_kato_projector_invariants(lagrangian):
    spec, prof = lagrangian
    build = lambda f: build_integrated_1d(spec.model, prof, f.lam)  # noqa: E731
    kb = kato_continue(build, _circle_path(1.0, 0.4, 16, 0.0, np.pi),
                       "-", "unstable")
    for P, R in zip(kb.P, kb.R):
        assert np.linalg.norm(P @ P - P) < 1e-10
        assert np.linalg.norm(P @ R - R) < 1e-10
    # rank constant along the path
    assert len({R.shape[1] for R in kb.R}) == 1


def test_kato_step_halving_band(lagrangian):
    # quarter circle in lambda; defect between successive refinements
    # shrinks by a factor in [3.5, 4.5] per halving (second-order scheme)
    spec, prof = lagrangian
    build = lambda f: build_integrated_1d(spec.model, prof, f.lam)  # noqa: E731
    ends = {}
    for m in (8, 16, 32, 64, 128):
        kb = kato_continue(build, _circle_path(1.2, 0.8, m, 0.0, np.pi / 2),
                           "+", "stable")
        ends[m] = kb.R[-1]
    defects = [np.linalg.norm(ends[m] - ends[2 * m]) for m in (8, 16, 32, 64)]
    ratios = [defects[i] / defects[i + 1] for i in range(3)]
    for rat in ratios:
        assert 3.5 <= rat <= 4.5, ratios


def test_kato_jordan_path_rejected():
    # family [[0,1],[delta,0]] crossing the Jordan block at delta = 0
    def matrix_of(f):
        return np.array([[0.0, 1.0], [f.lam.real, 0.0]], dtype=complex)

    tr = KatoTransport(matrix_of, Frequency(1.0), "stable")
    with pytest.raises(DiscontinuityError):
        tr.advance(Frequency(-1.0))


def test_glancing_model_displays():
    tau = lambda x: x  # noqa: E731
    A = glancing_model(0.0, 0.7, 1j * 0.7, tau)
    assert np.allclose(A, [[0.0, 1.0], [0.0, 0.0]])
    assert glancing_delta(0.0, 0.7, 1j * 0.7, tau) == pytest.approx(0.0)
    mus = np.linalg.eigvals(glancing_model(0.0, 0.0, -1.0, tau))
    assert np.allclose(np.sort(mus.imag), [-1.0, 1.0], atol=1e-12)
    assert np.abs(mus.real).max() < 1e-12


def test_glancing_square_root_exponent():
    tau = lambda x: x  # noqa: E731
    deltas = np.logspace(-6, -2, 25)
    mus = [np.abs(np.linalg.eigvals(
        glancing_model(d, 0.3, 1j * 0.3, tau))).max() for d in deltas]
    slope = np.polyfit(np.log(deltas), np.log(mus), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.01)
