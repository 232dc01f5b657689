import numpy as np
import pytest

from nsmlab.spectral import SpectralField, make_grid, transform


def band_limited(grid, n_comp=3, seed=0, kmax=6):
    """Random real field with modes up to ``kmax`` per axis."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_comp,) + grid.shape)
    c = transform(x, grid).coeffs
    c *= np.all(np.abs(grid.index) <= kmax, axis=0)
    return SpectralField(grid, c)


@pytest.fixture
def grid2():
    return make_grid(2, 32)


@pytest.fixture
def grid3():
    return make_grid(3, 16)


@pytest.fixture
def field_factory():
    return band_limited


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request, capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        request.config.stash.setdefault(ACCEPTANCE, {})[number] = line
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
