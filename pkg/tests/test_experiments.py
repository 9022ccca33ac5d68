import numpy as np
import pytest

from wsndetect.config import ExperimentConfig
from wsndetect.consensus import TransmissionLedger
from wsndetect.detectors import StatisticKind
from wsndetect.experiments import (
    CrocTable,
    deflection_sweep,
    empirical_croc,
    energy_report,
    run_croc_experiment,
    simulate_statistics,
    validate_estimator_asymptotics,
)
from wsndetect.model import GaussianMeanModel, Hypothesis

from conftest import REFERENCE_THETA1


@pytest.fixture(scope="module")
def small_tables():
    cfg = ExperimentConfig(n_trials=2500, grid_size=51).validated()
    ledger = TransmissionLedger(10)
    return run_croc_experiment(cfg, threads=2, ledger=ledger), ledger


def test_croc_table_invariants(small_tables):
    tables, _ = small_tables
    assert set(tables) == {StatisticKind.GLR_KNOWN_C, StatisticKind.LMP_KNOWN_C}
    for t in tables.values():
        assert np.all(np.diff(t.gamma) >= 0)
        assert np.all(np.diff(t.pfa_mc) <= 0) and np.all(np.diff(t.pmd_mc) >= 0)
        assert np.all(np.diff(t.pfa_theory) <= 0) and np.all(np.diff(t.pmd_theory) >= 0)
        for col in (t.pfa_mc, t.pmd_mc, t.pfa_theory, t.pmd_theory):
            assert np.all((col >= 0) & (col <= 1))
        np.testing.assert_allclose(t.stderr_pfa, np.sqrt(t.pfa_mc * (1 - t.pfa_mc) / 2500))
        assert t.metadata["seed"] == 2020


def test_distributed_ledger(small_tables):
    _, ledger = small_tables
    # one consensus run per trial and hypothesis
    assert ledger.total_broadcasts == 10 * 20 * 2500 * 2


def test_csv_header(small_tables):
    tables, _ = small_tables
    text = tables[StatisticKind.LMP_KNOWN_C].to_csv()
    lines = text.splitlines()
    assert lines[0] == "# statistic=LMP_KNOWN_C"
    assert "# seed=2020" in lines
    header = next(ln for ln in lines if not ln.startswith("#"))
    assert header.split(",") == CrocTable.COLUMNS
    assert len(lines) == lines.index(header) + 1 + 51


def test_thread_count_does_not_change_values():
    m = GaussianMeanModel.toeplitz(REFERENCE_THETA1, 0.3)
    kinds = [StatisticKind.GLR_KNOWN_C]
    a = simulate_statistics(m, 20, kinds, 2300, 5, threads=1)
    b = simulate_statistics(m, 20, kinds, 2300, 5, threads=3)
    for key in a:
        assert np.array_equal(a[key], b[key])
        assert a[key].shape == (2300,)


def test_hypotheses_use_different_streams():
    m = GaussianMeanModel.toeplitz(np.zeros(3), 0.3)
    v = simulate_statistics(m, 5, [StatisticKind.GLR_KNOWN_C], 100, 1)
    assert not np.array_equal(v[StatisticKind.GLR_KNOWN_C, Hypothesis.H0], v[StatisticKind.GLR_KNOWN_C, Hypothesis.H1])


def test_empirical_croc_ties():
    pfa, pmd = empirical_croc([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0], [2.0])
    assert pfa[0] == 0.75 and pmd[0] == 0.25


def test_unknown_cov_lmp_approaches_chi_square_at_independence():
    # rho = 0, long records: the nuisance-parameter statistic behaves like chi-square_N
    m = GaussianMeanModel.toeplitz(np.zeros(4), 0.0, cov_known=False)
    v = simulate_statistics(m, 400, [StatisticKind.LMP_UNKNOWN_C], 20_000, 3)[StatisticKind.LMP_UNKNOWN_C, Hypothesis.H0]
    assert v.mean() == pytest.approx(4.0, rel=0.03)
    assert v.var() == pytest.approx(8.0, rel=0.08)


def test_deflection_rho_zero_and_extrema():
    table = deflection_sweep([0.0, 0.5], np.arange(0, 360, 1.0))
    phi0, r0 = table.for_rho(0.0)
    assert np.all(r0 == 1.0)
    phi, r = table.for_rho(0.5)
    assert np.all(r > 0)
    assert set(phi[np.isclose(r, r.max(), rtol=1e-12)]) == {45.0, 225.0}
    assert set(phi[np.isclose(r, r.min(), rtol=1e-12)]) == {135.0, 315.0}


def test_deflection_invariant_to_norm_and_length():
    phis = np.arange(0, 360, 7.0)
    a = deflection_sweep([0.3, 0.8], phis, 1.0, 20).ratio
    b = deflection_sweep([0.3, 0.8], phis, 3.7, 200).ratio
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_energy_reference_numbers():
    rep = energy_report(10, 20)
    assert rep.lmp_broadcasts == 200
    assert rep.glr_broadcasts_model == 100
    assert "lmp_broadcasts=200" in rep.to_text()


def test_energy_single_node():
    rep = energy_report(1, 20, glr_constant=3.0)
    assert rep.lmp_broadcasts == 20
    assert rep.glr_broadcasts_model == 3.0


def test_energy_scaling():
    a, b = energy_report(8, 15), energy_report(16, 15)
    assert b.lmp_broadcasts == 2 * a.lmp_broadcasts
    assert b.glr_broadcasts_model == 4 * a.glr_broadcasts_model


def test_energy_uses_given_ledger():
    ledger = TransmissionLedger(3, [5, 5, 5])
    assert energy_report(3, 5, ledger=ledger).lmp_broadcasts == 15


def test_estimator_validation_identity():
    m = GaussianMeanModel(np.zeros(3), np.zeros(3), np.eye(3))
    rep = validate_estimator_asymptotics(m, 20, 20_000, seed=1)
    np.testing.assert_allclose(rep["predicted"], np.eye(3) / 20)
    assert rep["max_rel_diag_error"] < 0.05


def test_estimator_validation_improves_with_length():
    m = GaussianMeanModel.toeplitz(REFERENCE_THETA1, 0.3)
    short = validate_estimator_asymptotics(m, 20, 20_000, seed=2)
    long = validate_estimator_asymptotics(m, 200, 20_000, seed=2)
    assert long["max_abs_offdiag_error"] < short["max_abs_offdiag_error"]


def test_estimator_validation_needs_trials():
    with pytest.raises(ValueError):
        validate_estimator_asymptotics(GaussianMeanModel.toeplitz(np.zeros(2), 0.3), 20, 100, seed=1)
