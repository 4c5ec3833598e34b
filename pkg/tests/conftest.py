import numpy as np
import pytest

SKYLINE_STEPS = np.array([
    [1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
    [0, 1, 0, -1, 0, 2, 0, -2, 0, 1, 0, -1, 0],
], dtype=float)

KLEE_MINTY_STEPS = np.array([
    [1, 0, -1, 0, 1, 0, -1],
    [0, 1, 0, 0, 0, -1, 0],
    [0, 0, 0, 1, 0, 0, 0],
], dtype=float)


def slices_to_tensor(*slices):
    """Stack printed 2-d blocks as slices of constant third index."""
    return np.stack([np.asarray(s, dtype=float) for s in slices], axis=2)


# printed blocks, times 1/6
S_SKYLINE = slices_to_tensor([[343, 0], [84, 18]], [[-84, 18], [-36, 0]]) / 6
S_KLEE_MINTY = slices_to_tensor(
    [[0, 0, 0], [0, 0, 0], [0, 6, 0]],
    [[0, 0, 0], [0, 0, -6], [-6, 3, -3]],
    [[0, 6, 0], [-6, 3, 3], [0, 0, 1]],
) / 6

SKYLINE_A = 3.4952680660622583405
SKYLINE_B = 1.218447154323916453


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


# acceptance-criterion lines, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
