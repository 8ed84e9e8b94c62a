import pytest

from backend.utils.validation import ParameterValidator


@pytest.mark.parametrize(
    "text, dims",
    [("9", [9]), ("5..8", [5, 6, 7, 8]), ("16-18", [16, 17, 18]), (" 30:31 ", [30, 31])],
)
def test_dimension_ranges(text, dims):
    parsed, ok, message = ParameterValidator.parse_dimension_range(text)
    assert ok and message is None
    assert parsed == dims


@pytest.mark.parametrize("text", ["", "   ", "nine", "12..9", "1..4", "60..70"])
def test_bad_dimension_ranges(text):
    parsed, ok, message = ParameterValidator.parse_dimension_range(text)
    assert not ok
    assert parsed == []
    assert message


def test_lower_limit_is_configurable():
    _, ok, message = ParameterValidator.parse_dimension_range("5..12", low=9)
    assert not ok
    assert "9" in message


def test_grid_controls():
    assert ParameterValidator.validate_grid(2000, 1e-5) == (True, None)
    assert not ParameterValidator.validate_grid(8, 1e-5)[0]
    assert not ParameterValidator.validate_grid(2000, 1.0)[0]


@pytest.mark.parametrize(
    "beta, tau, alpha, gamma, ok",
    [
        (1.0, 0.0, 0.0, 0.0, True),
        (2.0, 3.0, 0.5, -1.0, True),
        (0.0, 0.0, 0.0, 0.0, False),
        (1.0, -0.1, 0.0, 0.0, False),
        (1.0, 0.0, 1.0, 0.0, False),
        (1.0, 0.0, 0.0, 0.1, False),
        (float("nan"), 0.0, 0.0, 0.0, False),
        (1.0, float("inf"), 0.0, 0.0, False),
    ],
)
def test_problem_parameters(beta, tau, alpha, gamma, ok):
    assert ParameterValidator.validate_problem(9, beta, tau, alpha, gamma)[0] is ok


def test_problem_messages_come_from_the_model():
    ok, message = ParameterValidator.validate_problem(9, 1.0, -0.1, 0.0, 0.0)
    assert not ok
    assert message.startswith("inadmissible parameters")
    assert "tau" in message


def test_problem_dimension_is_checked():
    ok, message = ParameterValidator.validate_problem(1, 1.0, 0.0, 0.0, 0.0)
    assert not ok
    assert "N" in message
