import numpy as np
import pytest

from axisdesc.grid import mask_from_foreground


def rect_mask(h: int, w: int, pad: int = 2):
    fg = np.zeros((h + 2 * pad, w + 2 * pad), dtype=bool)
    fg[pad : pad + h, pad : pad + w] = True
    return mask_from_foreground(fg, pad=pad)


@pytest.fixture
def rect():
    return rect_mask


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs of several seconds or more")


# PASS/FAIL lines from the acceptance suite, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
