import numpy as np
import pytest

from slingbag.model import Medium, PointCloud, make_planar_array

# acceptance tests append (number, title, passed, detail); printed at the end
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail}")


@pytest.fixture
def medium():
    return Medium(1500.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_array():
    # 3x3 sensors 15 mm below a 10 mm box centred at z = 20 mm
    return make_planar_array(3, 3, 4e-3, (0.0, 0.0, 0.0), num_samples=1024)


def random_cloud(rng, n, lo=(-4e-3, -4e-3, 16e-3), hi=(4e-3, 4e-3, 24e-3),
                 p0=(0.2, 1.0), a0=(0.1e-3, 0.3e-3)):
    return PointCloud(rng.uniform(lo, hi, size=(n, 3)), rng.uniform(*p0, size=n),
                      rng.uniform(*a0, size=n))
