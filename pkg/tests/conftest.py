import numpy as np
import pytest
from hypothesis import settings, strategies as st

from cavitycoop.model import SystemParams

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

rates = st.floats(0.0, 2.0, allow_nan=False)


@st.composite
def small_params(draw, max_dim=48):
    """Random SystemParams with Hilbert dimension at most ``max_dim``."""
    n = draw(st.integers(1, 3))
    n_max = draw(st.integers(1, max(1, max_dim // 2 ** n - 1)))
    return SystemParams(
        n_emitters=n,
        g=draw(rates),
        pump=draw(st.floats(0.01, 2.0)),
        n_max=n_max,
        kappa=draw(st.floats(0.2, 2.0)),
        dephasing=draw(rates),
        detunings=tuple(draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))),
    )


def random_params(rng, max_liouville_dim=4096):
    """Random physical parameters with D^2 below the given cap."""
    while True:
        n = int(rng.integers(1, 5))
        n_max = int(rng.integers(1, 12))
        d = (n_max + 1) * 2 ** n
        if d * d <= max_liouville_dim:
            break
    return SystemParams(
        n_emitters=n,
        g=float(rng.uniform(0.05, 3.0)),
        pump=float(rng.uniform(0.02, 3.0)),
        n_max=n_max,
        kappa=float(rng.uniform(0.3, 2.0)),
        dephasing=float(rng.choice([0.0, rng.uniform(0.0, 1.0)])),
        detunings=tuple(rng.uniform(-1.5, 1.5, n)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        crash = getattr(report.longrepr, "reprcrash", None)
        if report.outcome != "passed" and crash is not None:
            detail = f"{detail}  [{crash.message.splitlines()[0]}]".strip()
        _criteria[name] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda s: int(s.split("_")[2])):
        outcome, detail = _criteria[name]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        number = name.split("_")[2]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}")
