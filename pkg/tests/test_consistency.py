import numpy as np
import pytest
from scipy.stats import chi2

from domain.consistency import chi2_band, nees, run_ism_consistency
from domain.entities import NoiseParams
from domain.exceptions import InvalidArgumentError


def test_chi2_band_bounds_the_mean():
    lower, upper = chi2_band(6, 100)
    assert lower < 6.0 < upper
    assert lower == pytest.approx(chi2.ppf(0.025, 600) / 100)
    assert upper == pytest.approx(chi2.ppf(0.975, 600) / 100)


def test_chi2_band_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        chi2_band(0, 10)
    with pytest.raises(InvalidArgumentError):
        chi2_band(3, 10, confidence=1.0)


def test_nees_of_unit_covariance():
    assert nees(np.array([1.0, 2.0]), np.eye(2)) == pytest.approx(5.0)
    assert nees(np.array([1.0, 2.0]), np.diag([4.0, 4.0])) == pytest.approx(1.25)


@pytest.mark.slow
def test_ism_filter_is_consistent():
    result = run_ism_consistency(runs=100, steps=50, seed=1)
    assert result.mean_nees.shape == (50,)
    lower, upper = result.nees_band
    assert lower <= result.overall_nees <= upper
    # no single step strays far outside the band
    wide_lower, wide_upper = chi2_band(6, 100, confidence=0.9999)
    assert np.all((result.mean_nees >= wide_lower) & (result.mean_nees <= wide_upper))
    nis_lower, nis_upper = result.nis_band
    assert nis_lower <= result.overall_nis <= nis_upper


@pytest.mark.slow
def test_consistency_holds_for_other_noise_levels():
    result = run_ism_consistency(runs=100, steps=40, noise=NoiseParams(alpha=4.0, beta=0.2), seed=2)
    lower, upper = result.nees_band
    assert lower <= result.overall_nees <= upper
