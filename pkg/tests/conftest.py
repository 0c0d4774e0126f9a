import numpy as np
import pytest
from hypothesis import strategies as st

from homspec.config import reference_config
from homspec.spectral import JointSpectralAmplitude, make_grid, normalize


@pytest.fixture(scope="session")
def ref_cfg():
    return reference_config()


@pytest.fixture(scope="session")
def ref_grid(ref_cfg):
    return ref_cfg.frequency_grid()


@pytest.fixture(scope="session")
def ref_jsa(ref_cfg, ref_grid):
    return ref_cfg.source_spec().jsa(ref_grid)


def random_jsa(seed, n, complex_=True, center=190.0, span=4.0):
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=(n, n))
    if complex_:
        amp = amp + 1j * rng.normal(size=(n, n))
    return normalize(JointSpectralAmplitude(make_grid(center, span, n), amp))


jsa_params = st.tuples(st.integers(0, 2**32 - 1), st.integers(2, 64))
delays = st.floats(-20.0, 20.0, allow_nan=False)


ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def _report(key, ok, detail):
        ACCEPTANCE[key] = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE[key])
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abcde")), k)):
            terminalreporter.write_line(ACCEPTANCE[key])
