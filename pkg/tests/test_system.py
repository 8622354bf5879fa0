# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
Tests for the system model, validation and system files.
"""

from __future__ import annotations

from unittest.mock import patch

import numpy as np
import pytest

from conftest import SECTION6_TEXT
from ltvcommute.errors import SystemFileError, SystemValidationError
from ltvcommute.expr import parse
from ltvcommute.system import (
    LTVSystem,
    describe,
    format_system_file,
    load_system,
    parse_system_file,
    validate_system,
    write_system,
    write_text_atomic,
)


def test_parse_section6_a():
    s = parse_system_file(SECTION6_TEXT["A"])
    assert s.order == 1
    assert s.name == "A"
    assert s.t0 == 0.0
    assert s.initial_conditions == (0.0,)
    assert s.domain == (-0.5, 10.0)
    assert s.leading(1.0) == 2.0
    assert s.coefficient(0)(1.0) == 3.0


def test_scalar_system_file():
    s = parse_system_file('order = 0\ncoeff.0 = "5"\nt0 = 0\ndomain = [0, 1]\n', name="gain")
    assert s.is_scalar
    assert s.initial_conditions == ()
    assert s.name == "gain"


def test_ic_defaults_to_zero():
    s = parse_system_file(SECTION6_TEXT["B"])
    assert s.initial_conditions == (0.0,)


def test_vanishing_leading_coefficient_is_rejected():
    text = 'order = 1\ncoeff.1 = "t"\ncoeff.0 = "1"\nt0 = 0.5\ndomain = [-1, 1]\n'
    with pytest.raises(SystemValidationError) as info:
        parse_system_file(text)
    assert info.value.report is not None
    assert not info.value.report.passed


@pytest.mark.parametrize(
    ("text", "line", "message"),
    [
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\nt0 = 0\ndomain = [0, 1]\ncolour = 3\n', 6, "Unknown key 'colour'"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\ndomain = [0, 1]\n', None, "Missing key 't0'"),
        ('order = 1\ncoeff.1 = "t+1"\nt0 = 0\ndomain = [0, 1]\n', 1, "coeff.0..coeff.1"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\nt0 = 0\nic = [1, 2]\ndomain = [0, 1]\n', 5, "'ic' has length 2"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = 1\nt0 = 0\ndomain = [0, 1]\n', 3, "quoted expression"),
        ('order = -1\ncoeff.0 = "1"\nt0 = 0\ndomain = [0, 1]\n', 1, "non-negative integer"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\nt0 = 0\ndomain = [1, 0]\n', 5, "lo <= hi"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\nt0 = 3\ndomain = [0, 1]\n', 4, "outside the domain"),
        ('order = 1\ncoeff.1 = "t+1"\ncoeff.x = "1"\nt0 = 0\ndomain = [0, 1]\n', 3, "Unknown key 'coeff.x'"),
    ],
)
def test_system_file_errors(text, line, message):
    with pytest.raises(SystemFileError, match=message) as info:
        parse_system_file(text)
    assert info.value.line == line


def test_duplicate_key_reports_line():
    text = 'order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "1"\ncoeff.0 = "2"\nt0 = 0\ndomain = [0, 1]\n'
    with pytest.raises(SystemFileError) as info:
        parse_system_file(text)
    assert info.value.line == 4


def test_expression_error_is_rereported_with_offset():
    text = 'order = 1\ncoeff.1 = "t+1"\ncoeff.0 = "2*x"\nt0 = 0\ndomain = [0, 1]\n'
    with pytest.raises(SystemFileError, match=r"coeff\.0: Unknown identifier 'x' \(at byte 2\)") as info:
        parse_system_file(text)
    assert info.value.line == 3


def test_comments_and_blank_lines_are_ignored():
    text = "# a comment\n\n" + SECTION6_TEXT["A"] + "\n# trailing\n"
    assert parse_system_file(text).order == 1


def test_round_trip(tmp_path, section6):
    a, _, _ = section6
    source = a.with_initial_conditions([0.25])
    path = tmp_path / "a.sys"
    write_system(source, path)
    again = load_system(path)
    assert again.order == source.order
    assert again.t0 == source.t0
    assert again.initial_conditions == source.initial_conditions
    assert again.domain == source.domain
    assert again.name == "A"
    for t in np.linspace(-0.5, 10.0, 25):
        for i in range(2):
            assert again.coefficient(i)(t) == source.coefficient(i)(t)


def test_round_trip_of_synthesized_coefficients(tmp_path):
    s = LTVSystem((parse("t+2") * 2.0 + 1.0, parse("(t+1)^0.5") / 4.0), domain=(0.0, 3.0))
    again = parse_system_file(format_system_file(s))
    for t in (0.0, 1.3, 3.0):
        assert again.coefficient(0)(t) == pytest.approx(s.coefficient(0)(t), rel=1e-15)
        assert again.coefficient(1)(t) == pytest.approx(s.coefficient(1)(t), rel=1e-15)


def test_load_system_uses_file_stem(tmp_path):
    path = tmp_path / "plant.sys"
    path.write_text('order = 1\ncoeff.1 = "1"\ncoeff.0 = "1"\nt0 = 0\ndomain = [0, 1]\n', encoding="utf-8")
    assert load_system(path).name == "plant"


def test_atomic_write_failure_leaves_no_temp_file(tmp_path):
    target = tmp_path / "out.txt"
    with patch("ltvcommute.system.os.replace", side_effect=OSError("disk full")):
        with pytest.raises(RuntimeError, match="Failed to write"):
            write_text_atomic(target, "hello")
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old", encoding="utf-8")
    write_text_atomic(target, "new")
    assert target.read_text(encoding="utf-8") == "new"


def test_validate_section6_a():
    a = LTVSystem(("t+2", "t+1"), t0=0.0, domain=(-0.9, 10.0))
    report = validate_system(a)
    assert report.passed
    assert report.positive_leading
    assert report.min_abs_leading == pytest.approx(0.1, abs=1e-12)
    assert report.argmin == pytest.approx(-0.9)


def test_validate_detects_crossing_between_samples():
    s = LTVSystem(("1", "t+1"), t0=-2.0, domain=(-2.0, 0.0))
    report = validate_system(s, gridpoints=1000)
    assert not report.passed
    assert not report.positive_leading
    t, reason = report.violations[0]
    assert t == pytest.approx(-1.0, abs=1e-9)
    assert "leading coefficient" in reason


def test_validate_scalar():
    s = LTVSystem(("t+1",), t0=0.0, domain=(0.0, 5.0))
    assert validate_system(s).passed


def test_validate_reports_domain_errors():
    s = LTVSystem(("ln(t)", "1"), t0=0.0, domain=(0.0, 1.0))
    report = validate_system(s)
    assert not report.passed
    assert report.violations[0][0] == 0.0


def test_negative_leading_is_valid_but_not_positive():
    s = LTVSystem(("-t+1", "-(t+1)"), domain=(0.0, 5.0))
    report = validate_system(s)
    assert report.passed
    assert not report.positive_leading


def test_system_helpers(section6):
    a, _, _ = section6
    assert a.label == "A"
    assert LTVSystem(("1", "1")).label == "order-1 system"
    assert a.relaxed().initial_conditions == (0.0,)
    assert a.with_initial_time(2.0).t0 == 2.0
    assert a.with_domain(0.0, 1.0).domain == (0.0, 1.0)
    window = a.with_initial_conditions([1.0]).restricted(2.0, 3.0)
    assert (window.t0, window.domain, window.initial_conditions) == (2.0, (2.0, 3.0), (0.0,))
    assert a.contains(0.0, 10.0)
    assert not a.contains(0.0, 11.0)
    assert describe(a) == "A: order 1 [a1=t + 1, a0=t + 2] t0=0"
    with pytest.raises(IndexError):
        a.coefficient(2)


def test_system_construction_errors():
    with pytest.raises(ValueError, match="contain t0"):
        LTVSystem(("1", "1"), t0=5.0, domain=(0.0, 1.0))
    with pytest.raises(ValueError, match="Initial conditions"):
        LTVSystem(("1", "1"), initial_conditions=(1.0, 2.0))
    with pytest.raises(ValueError):
        LTVSystem(())


def test_default_domain():
    s = LTVSystem(("1", "1"), t0=2.0)
    assert s.domain == (2.0, 7.0)
