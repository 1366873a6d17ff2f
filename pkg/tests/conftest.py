import sys
from pathlib import Path

import pytest
from hypothesis import settings

from mmalab.kernels import make_kernel
from mmalab.measures import levy_measure, mixing_measure
from mmalab.simulate import ModelSpec, Windows

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def models_dir() -> Path:
    return MODELS


def atom_model(z=2.0, rate=0.3, x=1.0, b=0.0, kernel="supou", windows=None, **kpar) -> ModelSpec:
    """supOU-style model with one jump size and one mixing atom."""
    return ModelSpec(0.0, b, levy_measure("atom-list", atoms=[(z, rate)]),
                     mixing_measure("finite-atoms", atoms=[(x, 1.0)]),
                     make_kernel(kernel, **kpar), windows or Windows())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
