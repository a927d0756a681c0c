import pytest

from normflow.cli import build_problem, validate_config
from normflow.flow import flow_exact

PRESETS = ("one-one-resonance", "golden-mean", "henon-heiles-like")


def preset_problem(name, K):
    cfg = validate_config({"K": K, "hamiltonian": {"preset": name}})
    return build_problem(cfg)


@pytest.fixture(scope="session")
def flows8():
    """Exact K=8 flow for every preset, shared across the acceptance gate."""
    out = {}
    for name in PRESETS:
        H, omega = preset_problem(name, 8)
        out[name] = (H, omega, flow_exact(H, omega, 8))
    return out
