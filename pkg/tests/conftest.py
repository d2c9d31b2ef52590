import numpy as np
import pytest

from tmtmag import AcquisitionPlan, SensorParams


@pytest.fixture(scope="session")
def paper_params() -> SensorParams:
    """Readout/coherence parameters used throughout the benchmark suite."""
    return SensorParams.from_contrast(
        contrast=0.2143, n_ave=0.196, t2_star=3.9e-6, decay_power=2.0, b_calib=100e-6
    )


@pytest.fixture
def short_plan() -> AcquisitionPlan:
    """Small window for fast unit tests (100 samples)."""
    return AcquisitionPlan(t_start=0.97e-6, t_stop=1.75e-6, f_sample=128e6,
                           repetitions=25000, n_experiments=20, seed=1234)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
