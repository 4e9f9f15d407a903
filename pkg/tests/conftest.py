import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from amac.channels import capacity, xor_mac, xor_preimage_input, z_channel
from amac.probability import compose, product

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []

SIGMA = 0.101


@pytest.fixture(scope="session")
def study():
    """Channel, capacity, input law and joint law of the xor-Z MAC instance."""
    w1 = z_channel(SIGMA)
    c, q = capacity(w1)
    p = xor_preimage_input(q)
    w = xor_mac(w1).matrix
    return {"w1": w1, "c": c, "q": q, "p": p, "w": w, "P": compose(product(p, p), w)}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("ab:c"))):
            terminalreporter.write_line(line)
