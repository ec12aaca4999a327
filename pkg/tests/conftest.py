import pytest

from levychaos.kernelspace import LevyMeasureSpec, StateSpace, TimeGrid

MARKS = ((1.0, 2.5), (-0.5, 1.5))  # total rate 4 on T = 1


@pytest.fixture
def space():
    """Desk-scale space: 4 cells x 2 marks, T * total_rate = 4."""
    return StateSpace(TimeGrid.regular(1.0, 4), LevyMeasureSpec(MARKS))


@pytest.fixture
def tiny_space():
    """2 cells x 2 marks with a high degree cap, for the exponential suite."""
    return StateSpace(TimeGrid.regular(1.0, 2), LevyMeasureSpec(MARKS), degree_cap=8)
