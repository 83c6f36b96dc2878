import pytest

from afdof import ChannelRealization, plan_achievability

# Integer-gain channel used throughout as the hand-checkable reference:
# hop determinants -5 and -1, cross determinants -11 and 4, and a closed
# form power constant c = 1 / (2 sqrt(11)).
REFERENCE_GAINS = (1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 2.0, 1.0)


def reference_channel() -> ChannelRealization:
    return ChannelRealization(*REFERENCE_GAINS)


@pytest.fixture
def ref_channel() -> ChannelRealization:
    return reference_channel()


@pytest.fixture
def ref_plan(ref_channel):
    return plan_achievability(ref_channel)
