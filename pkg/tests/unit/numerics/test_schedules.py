import pytest

from toolkit.exceptions import ConfigurationError
from weightspace.numerics import LrSchedule, ScheduleKind, lr_schedule


@pytest.mark.unit()
def test_staged_endpoints():
    rate = lr_schedule("staged", 1e-3, 1e-5, total_steps=1000, stages=5)
    assert rate(0) == pytest.approx(1e-3)
    assert rate(1000) == pytest.approx(1e-5)
    assert len({round(rate(t), 12) for t in range(0, 1001, 10)}) == 5


@pytest.mark.unit()
def test_cosine_endpoints():
    rate = lr_schedule("cosine", 1e-2, 1e-5, total_steps=10_000)
    assert rate(0) == pytest.approx(1e-2)
    assert rate(10_000) == pytest.approx(1e-5)


@pytest.mark.unit()
@pytest.mark.parametrize("kind", list(ScheduleKind))
def test_monotone_and_clamped(kind):
    rate = lr_schedule(kind, 1e-2, 1e-4, total_steps=100)
    values = [rate(t) for t in range(0, 150)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert rate(150) == rate(100)


@pytest.mark.unit()
def test_equal_endpoints_are_constant():
    rate = lr_schedule("cosine", 1e-3, 1e-3, total_steps=50)
    assert {rate(t) for t in range(60)} == {1e-3}


@pytest.mark.unit()
@pytest.mark.parametrize(
    "kwargs",
    [
        {"start": 1e-5, "end": 1e-3, "total_steps": 10},
        {"start": 1e-3, "end": 0.0, "total_steps": 10},
        {"start": 1e-3, "end": 1e-5, "total_steps": 0},
    ],
)
def test_invalid_schedules(kwargs):
    with pytest.raises(ConfigurationError):
        LrSchedule(kind=ScheduleKind.COSINE, **kwargs)
