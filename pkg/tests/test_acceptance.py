"""Acceptance suite: one test per criterion, printing a pass/fail line each.

Criteria 1-6 plus the {4^3, 8^3} convergence gate run in a few minutes; the
full convergence study (16^3), the dt sweep, divergence cleaning and the
Orszag-Tang robustness run are marked slow (deselect with -m "not slow").
Run with `pytest -s tests/test_acceptance.py` to see the measurement lines.
"""

from __future__ import annotations

import pytest

from mhdsem import verification as ver


def _run(check):
    result = check(seed=0)
    print()
    print(result.line())
    assert result.passed, result.detail


def test_criterion_01_operator_suite():
    _run(ver.check_operators)


def test_criterion_02_metric_free_stream_suite():
    _run(ver.check_metrics_free_stream)


def test_criterion_03_ec_flux_property_suite():
    _run(ver.check_ec_flux)


def test_criterion_04_k_matrix_suite():
    _run(ver.check_k_matrices)


def test_criterion_05_volume_entropy_identities():
    _run(ver.check_volume_identities)


def test_criterion_06_semidiscrete_entropy():
    _run(ver.check_semidiscrete_entropy)


def test_criterion_07_convergence_subset():
    _run(ver.check_convergence_subset)


@pytest.mark.slow
def test_criterion_07_convergence_full():
    _run(ver.check_convergence_full)


@pytest.mark.slow
def test_criterion_08_temporal_entropy_order():
    _run(ver.check_temporal_order)


@pytest.mark.slow
def test_criterion_09_divergence_cleaning():
    _run(ver.check_divergence_cleaning)


@pytest.mark.slow
def test_criterion_10_robustness_orszag_tang():
    _run(ver.check_robustness)
