import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disbec.discretize import Grid, PotentialOnGrid, assemble_potential, schrodinger_operator
from disbec.disorder import DisorderSample, sample_poisson
from disbec.errors import DomainError, UsageError
from disbec.gp_solve import minimize_gp, solve_hard_wall
from disbec.spectrum import (depletion_bound, gap_lower_bound, hard_wall_spectrum,
                             lowest_eigenpairs, mean_field_hamiltonian, mean_field_spectrum)

PI2 = math.pi**2


def _orthonormality(res, grid):
    V = res.eigenvectors
    return np.max(np.abs(grid.h * V.T @ V - np.eye(V.shape[1])))


def test_free_spectrum():
    res = lowest_eigenpairs(schrodinger_operator(PotentialOnGrid.zero(Grid(2000))), 3)
    exact = PI2 * np.arange(1, 5) ** 2
    assert np.all(np.abs(res.eigenvalues - exact) / exact < 1e-3)
    assert res.gap == pytest.approx(res.eigenvalues[1] - res.eigenvalues[0])


def test_dense_oracle():
    rng = np.random.default_rng(3)
    grid = Grid(200)
    pot = PotentialOnGrid(values=rng.uniform(0, 5e3, grid.M), integral=0.0, grid=grid)
    op = schrodinger_operator(pot)
    res = lowest_eigenpairs(op, 10)
    dense = np.linalg.eigh(op.to_dense())[0][:11]
    assert np.max(np.abs(res.eigenvalues - dense)) < 1e-8
    assert _orthonormality(res, grid) < 1e-8
    for j in range(11):
        v = res.eigenvectors[:, j] * math.sqrt(grid.h)
        assert np.linalg.norm(op.matvec(v) - res.eigenvalues[j] * v) <= 1e-8 * op.norm_bound()


def test_clustered_pair_stays_orthogonal():
    # two identical wells behind very strong barriers: a near-degenerate pair
    grid = Grid(801)
    vals = np.zeros(grid.M)
    vals[:200] = 1e12
    vals[399:402] = 1e12
    vals[601:] = 1e12
    pot = PotentialOnGrid(values=vals, integral=0.0, grid=grid)
    res = lowest_eigenpairs(schrodinger_operator(pot), 3)
    assert res.eigenvalues[1] - res.eigenvalues[0] < 1e-9 * res.eigenvalues[0]
    assert _orthonormality(res, grid) < 1e-8


def test_shift_is_exact():
    grid = Grid(300)
    op = schrodinger_operator(assemble_potential(sample_poisson(10.0, 4), 30.0, grid))
    a = lowest_eigenpairs(op, 3)
    b = lowest_eigenpairs(op.shifted(123.25), 3)
    scale = op.norm_bound()
    assert np.max(np.abs(b.eigenvalues - a.eigenvalues - 123.25)) < 1e-12 * scale
    assert abs(a.gap - b.gap) < 1e-12 * scale


def test_k_range():
    op = schrodinger_operator(PotentialOnGrid.zero(Grid(40)))
    with pytest.raises(UsageError):
        lowest_eigenpairs(op, 0)
    with pytest.raises(UsageError):
        lowest_eigenpairs(op, 11)


def test_mean_field_operator():
    grid = Grid(2000)
    pot = PotentialOnGrid.zero(grid)
    psi = math.sqrt(2.0) * np.sin(math.pi * grid.nodes)
    psi /= math.sqrt(grid.h * np.dot(psi, psi))
    bare = schrodinger_operator(pot)
    h0 = mean_field_hamiltonian(pot, 0.0, psi)
    assert np.array_equal(h0.diagonal, bare.diagonal)
    assert abs(lowest_eigenpairs(h0, 1).eigenvalues[0] - PI2) < 1e-3
    with pytest.raises(UsageError):
        mean_field_hamiltonian(pot, 1.0, 2 * psi)


def test_ground_state_identity():
    grid = Grid(3000)
    pot = assemble_potential(sample_poisson(10.0, 8), 20.0, grid)
    sol = minimize_gp(pot, 25.0, grid)
    spec = mean_field_spectrum(pot, 25.0, sol.psi)
    assert abs(spec.eigenvalues[0] - sol.e0) <= 1e-5 * sol.e0
    assert math.sqrt(grid.h * np.sum((spec.eigenvectors[:, 0] - sol.psi) ** 2)) < 1e-4


def test_gap_bound_formula():
    eta, bound = gap_lower_bound(0.0)
    assert eta == pytest.approx(math.pi)
    assert bound == pytest.approx(math.pi * math.log1p(math.pi * math.exp(-2 * math.pi)))
    assert bound == pytest.approx(0.01838, abs=1e-5)
    assert 3 * PI2 >= bound
    assert gap_lower_bound(math.inf) == (math.inf, 0.0)
    with pytest.raises(DomainError):
        gap_lower_bound(-1.0)


def test_gap_bound_decays():
    vals = [gap_lower_bound(w)[1] for w in np.logspace(0, 6, 50)]
    # strictly decreasing until the value underflows to zero
    assert all(b < a or b == 0.0 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0
    eta, b = gap_lower_bound(1e4)
    assert b / (math.pi * eta * math.exp(-2 * eta)) == pytest.approx(1.0, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(nu=st.sampled_from([10.0, 30.0]), sigma=st.sampled_from([10.0, 100.0]),
       gamma=st.sampled_from([0.0, 10.0]), seed=st.integers(0, 10**6))
def test_gap_exceeds_bound(nu, sigma, gamma, seed):
    grid = Grid(1500)
    pot = assemble_potential(sample_poisson(nu, seed), sigma, grid)
    sol = minimize_gp(pot, gamma, grid)
    spec = mean_field_spectrum(pot, gamma, sol.psi)
    assert spec.gap >= spec.gap_bound


def test_depletion_examples():
    assert depletion_bound(1e6, 4.0, 10.0, 15.0) == pytest.approx(0.04, rel=1e-15)
    assert depletion_bound(1e6, 1.0, 10.0, 15.0) == pytest.approx(0.02, rel=1e-15)
    assert depletion_bound(8e6, 4.0, 10.0, 15.0) == pytest.approx(0.02, rel=1e-15)
    assert depletion_bound(1.0, 1e4, 1.0, 1.5) > 1  # returned as is


def test_depletion_monotone():
    assert depletion_bound(1e6, 2.0, 5.0, 9.0) < depletion_bound(1e6, 2.0, 5.0, 8.0)
    assert depletion_bound(2e6, 2.0, 5.0, 8.0) < depletion_bound(1e6, 2.0, 5.0, 8.0)


@pytest.mark.parametrize("args", [(1e6, 1.0, 5.0, 5.0), (0.5, 1.0, 5.0, 6.0),
                                  (1e6, -1.0, 5.0, 6.0)])
def test_depletion_errors(args):
    with pytest.raises(DomainError):
        depletion_bound(*args)
    with pytest.raises(DomainError):
        depletion_bound(1e6, 1.0, 5.0, 6.0, C=0.0)


def test_large_sigma_gap_probe():
    # recorded only: the product gap * sigma * m should sit in a fixed band
    grid = Grid(3000)
    s = sample_poisson(20.0, 5)
    products = []
    for sigma in (1e3, 1e4, 1e5):
        pot = assemble_potential(s, sigma, grid)
        spec = lowest_eigenpairs(schrodinger_operator(pot), 1)
        products.append(spec.gap * sigma * s.count)
    assert all(p > 0 and math.isfinite(p) for p in products)
    print("gap*sigma*m:", products)


def test_hard_wall_levels_linear():
    s = DisorderSample.from_positions([0.2, 0.55])
    sol = solve_hard_wall(s, 0.0)
    spec = hard_wall_spectrum(s.lengths, sol.interval_masses, 0.0, sol.mu)
    ell = np.sort(s.lengths)[::-1]
    assert spec.eigenvalues[0] == pytest.approx(PI2 / ell[0] ** 2)
    assert spec.gap == pytest.approx(min(4 * PI2 / ell[0] ** 2, PI2 / ell[1] ** 2)
                                     - PI2 / ell[0] ** 2)
    assert spec.gap_bound == 0.0


def test_hard_wall_levels_match_e0():
    s = sample_poisson(20.0, 11)
    sol = solve_hard_wall(s, 40.0)
    spec = hard_wall_spectrum(s.lengths, sol.interval_masses, 40.0, sol.mu)
    assert spec.eigenvalues[0] == pytest.approx(sol.e0, rel=1e-10)


def test_json():
    res = lowest_eigenpairs(schrodinger_operator(PotentialOnGrid.zero(Grid(50))), 2)
    d = json.loads(res.with_bound(0.0).to_json())
    assert set(d) == {"eigenvalues", "gap", "gap_bound", "eta"}
    assert res.eigenvectors_csv(Grid(50)).startswith("z,psi_0,psi_1,psi_2")


def test_ground_state_lies_in_lowest_cluster():
    # with near-degenerate wells only the span of the lowest cluster is well defined
    grid = Grid(4000)
    for seed in range(6):
        pot = assemble_potential(sample_poisson(30.0, seed), 1e3, grid)
        sol = minimize_gp(pot, 900.0, grid)
        spec = lowest_eigenpairs(mean_field_hamiltonian(pot, 900.0, sol.psi), 5)
        cluster = np.abs(spec.eigenvalues - sol.e0) <= 1e-6 * sol.e0
        P = spec.eigenvectors[:, cluster]
        rest = sol.psi - P @ (grid.h * P.T @ sol.psi)
        assert math.sqrt(grid.h * np.dot(rest, rest)) < 1e-6
