from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from d2dlink.config import from_dict, load_config

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(str(resources.files("d2dlink") / "data"))
REFERENCE_CONFIG = DATA / "reference_org30.json"
GOLDEN = Path(__file__).parent / "golden"


def make_cfg(**kw):
    base = dict(pkg_type="org", reach_mm=10.0, bump_pitch_um=112.64, data_rate_Gbps=16.0, lane_count=1)
    base.update(kw)
    return from_dict(base)


@pytest.fixture(scope="session")
def reference_cfg():
    return load_config(REFERENCE_CONFIG)


@pytest.fixture(scope="session")
def reference_run(reference_cfg):
    """Pipeline result and artifacts for the shipped reference config (computed once)."""
    from d2dlink.driver import build_artifacts, run_pipeline

    pr = run_pipeline(reference_cfg, workers=4)
    return pr, build_artifacts(pr)


# ------------------------------------------------------------ acceptance report

ACCEPTANCE: dict[int, str] = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        import time

        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        dt = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        why = self.detail if exc_type is None else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE[self.number] = f"criterion {self.number:2d} {status}  {self.title} ({dt:.1f} s){'  ' + why if why else ''}"
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
