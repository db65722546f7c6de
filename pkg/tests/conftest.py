import numpy as np
import pytest


def finite_difference_grads(loss_fn, params, eps=1e-5):
    """Central-difference gradient of loss_fn() for each parameter tensor.

    Perturbs parameter values in place; loss_fn must re-run the forward pass.
    """
    out = []
    for p in params:
        g = np.zeros_like(p.value)
        flat = p.value.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss_fn()
            flat[i] = orig - eps
            lm = loss_fn()
            flat[i] = orig
            gf[i] = (lp - lm) / (2.0 * eps)
        out.append(g)
    return out


def relative_error(a_list, b_list):
    a = np.concatenate([np.asarray(a).ravel() for a in a_list])
    b = np.concatenate([np.asarray(b).ravel() for b in b_list])
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run (survives capture)
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
