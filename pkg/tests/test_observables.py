import json
import math
from dataclasses import replace

import numpy as np
import pytest

from disbec.discretize import Grid, assemble_potential
from disbec.disorder import DisorderSample, sample_poisson
from disbec.errors import DomainError, UsageError
from disbec.gc_model import solve_mu
from disbec.gp_solve import minimize_gp, solve_hard_wall
from disbec.observables import (compare_model, default_momenta, interval_masses,
                                mixture_momentum_density, momentum_csv, momentum_density,
                                occupation_threshold, predicted_masses, two_hump_pair)


def _sine(grid):
    return math.sqrt(2.0) * np.sin(math.pi * grid.nodes)


def test_partition_sums_to_one():
    grid = Grid(3000)
    for seed in range(5):
        s = sample_poisson(20.0, seed)
        sol = minimize_gp(assemble_potential(s, 50.0, grid), 40.0)
        masses, lam = interval_masses(sol, s)
        assert abs(masses.sum() - 1.0) < 1e-8
        assert 0 < lam <= 1
        hw = solve_hard_wall(s, 40.0, grid=grid)
        assert abs(interval_masses(hw, s)[0].sum() - 1.0) < 1e-8


def test_linear_hard_wall_occupies_one_gap():
    s = sample_poisson(30.0, 7)
    _, lam = interval_masses(solve_hard_wall(s, 0.0), s)
    assert lam == 1 / (s.count + 1)


def test_delocalized_anchor():
    nu = 30.0
    s = sample_poisson(nu, 3)
    _, lam = interval_masses(solve_hard_wall(s, 1e4 * nu * nu), s)
    assert lam > 0.9


def test_threshold():
    assert occupation_threshold(9) == 1e-4


def test_mismatch_is_refused():
    a, b = sample_poisson(20.0, 1), sample_poisson(20.0, 2)
    sol = solve_hard_wall(a, 10.0)
    with pytest.raises(UsageError):
        interval_masses(sol, b)
    grid = Grid(2000)
    soft = minimize_gp(assemble_potential(a, 30.0, grid), 10.0)
    with pytest.raises(UsageError):
        interval_masses(soft, b)


def test_sine_transform_matches_closed_form():
    grid = Grid(4000)
    p = np.array([0.0, 1.0, 2.5, 5.0, 11.0, 40.0])
    exact = 2 * math.pi**2 * 2 * (1 + np.cos(p)) / (math.pi**2 - p**2) ** 2 / (2 * math.pi)
    assert np.allclose(momentum_density(_sine(grid), p, grid), exact, rtol=1e-4, atol=1e-12)


def test_sine_symmetric_and_parseval():
    grid = Grid(4000)
    p = default_momenta()
    rho = momentum_density(_sine(grid), p, grid)
    assert np.allclose(rho, rho[::-1], rtol=1e-12, atol=1e-15)
    assert abs(np.trapezoid(rho, p) - 1.0) < 1e-3
    assert abs(p[np.argmax(rho)]) < 0.05


@pytest.mark.xfail(strict=True, reason="the half-sine transform peaks at p = 0")
def test_sine_peak_near_pi():
    grid = Grid(4000)
    p = default_momenta()
    rho = momentum_density(_sine(grid), p, grid)
    assert abs(abs(p[np.argmax(rho)]) - math.pi) < 0.5


def test_parseval_tail_shrinks_with_window():
    # hard-wall profiles have kinks, so their tail decays like p^-4
    s = sample_poisson(20.0, 2)
    sol = solve_hard_wall(s, 400.0, grid=Grid(8000))
    small = np.trapezoid(momentum_density(sol), default_momenta())
    p = default_momenta(200 * math.pi, 20001)
    large = np.trapezoid(momentum_density(sol, p), p)
    assert abs(large - 1.0) < abs(small - 1.0)
    assert abs(large - 1.0) < 1e-3


def test_coherent_versus_fragmented():
    grid = Grid(4000)
    coherent, humps = two_hump_pair(grid, 0.4)
    pos_coh = coherent**2
    pos_mix = 0.5 * humps[0] ** 2 + 0.5 * humps[1] ** 2
    assert grid.h * np.abs(pos_coh - pos_mix).sum() < 1e-12
    p = default_momenta()
    a = momentum_density(coherent, p, grid)
    b = mixture_momentum_density(humps, [0.5, 0.5], grid, p)
    assert np.trapezoid(np.abs(a - b), p) > 0.1
    with pytest.raises(UsageError):
        mixture_momentum_density(humps, [0.7, 0.7], grid, p)


def test_raw_psi_needs_grid():
    with pytest.raises(UsageError):
        momentum_density(np.ones(10))
    text = momentum_csv(np.array([0.0]), np.array([1.0]))
    assert text == "p,rho\n0.0,1.0\n"


def test_compare_model_contract():
    s = sample_poisson(30.0, 1)
    gc = solve_mu(900.0, 30.0)
    with pytest.raises(DomainError):
        compare_model(solve_hard_wall(s, 0.0), s, gc)
    with pytest.raises(UsageError):
        compare_model(solve_hard_wall(s, 100.0), s, gc)
    with pytest.raises(UsageError):
        grid = Grid(2000)
        compare_model(minimize_gp(assemble_potential(s, 30.0, grid), 900.0), s, gc)
    rep = compare_model(solve_hard_wall(s, 900.0), s, gc)
    assert 0 <= rep.mass_tv_distance <= 1
    assert 0 <= rep.lambda_num <= 1 and 0 <= rep.lambda_gc <= 1
    assert set(json.loads(rep.to_json())) == set(rep.to_csv_row().splitlines()[0].split(","))


def test_predicted_masses_fall_back_to_largest_gap():
    s = DisorderSample.from_positions([0.3, 0.45])
    gc = replace(solve_mu(900.0, 30.0), mu=5.0)  # threshold length above 1
    pred = predicted_masses(s, gc)
    assert list(pred) == [0.0, 0.0, 1.0]


def _mean_gap(nu, gamma, seeds=20):
    gc = solve_mu(gamma, nu)
    out = []
    for seed in range(seeds):
        s = sample_poisson(nu, seed)
        out.append(compare_model(solve_hard_wall(s, gamma), s, gc).relative_energy_gap)
    return float(np.mean(out))


@pytest.mark.xfail(strict=True, reason="model energy misses by about half at this point")
def test_localized_anchor_energy_gap():
    assert _mean_gap(30.0, 30.0) < 0.15


@pytest.mark.slow
def test_energy_gap_decreases_along_quadratic_coupling():
    gaps = [_mean_gap(nu, nu * nu) for nu in (30.0, 100.0, 300.0)]
    assert gaps[0] > gaps[1] > gaps[2]
