from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from gpex.exchange import (
    BUILTINS,
    GpeParseError,
    InvalidExchange,
    builtin,
    evaluate,
    format_gpe,
    inverse,
    make_euclidean_exchange,
    make_rectangle_exchange,
    parse_gpe,
    validate,
)
from gpex.geometry import AffineMap2, Point, point, rectangle


def baker_oracle(x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
    if x < Fraction(1, 2):
        return 2 * x, y / 2
    return 2 * x - 1, (y + 1) / 2


def to_fraction(p: Point) -> tuple[Fraction, Fraction]:
    return tuple(Fraction(int(v.numerator), int(v.denominator)) for v in p)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_validate(name):
    g = builtin(name)
    assert validate(g).ok, validate(g).violations


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_description_roundtrip(name):
    g = builtin(name)
    assert parse_gpe(format_gpe(g)) == g


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin("nonesuch")


grid = st.integers(1, 996).map(lambda k: mpq(k, 997))


@given(grid, grid)
def test_baker_matches_closed_form(x, y):
    orbit = evaluate(builtin("baker"), (x, y), 5)
    fx, fy = to_fraction(Point(x, y))
    for p in orbit.points[1:]:
        fx, fy = baker_oracle(fx, fy)
        assert to_fraction(p) == (fx, fy)
    assert orbit.regular


def test_singular_hit_reports_step():
    orbit = evaluate(builtin("baker"), ("1/4", "1/3"), 4)
    # 1/4 -> 1/2 lands on the cut
    assert orbit.singular_step == 1
    assert orbit.status == "SingularHit(1)"


def test_point_outside_domain():
    with pytest.raises(ValueError):
        evaluate(builtin("baker"), (2, 0), 1)


@pytest.mark.parametrize("name", ["baker", "rotation", "skew-rotation", "quadrant-rotation", "shear", "skew-baker"])
@given(grid, grid)
def test_inverse_undoes_map(name, x, y):
    g = builtin(name)
    fwd = evaluate(g, (x, y), 1)
    if not fwd.regular:
        return
    back = evaluate(inverse(g), fwd.last, 1)
    assert back.regular
    assert back.last == Point(x, y)


def test_inverse_is_valid():
    for name in BUILTINS:
        assert validate(inverse(builtin(name))).ok


def test_overlapping_atoms_rejected():
    with pytest.raises(InvalidExchange) as exc:
        make_rectangle_exchange([(0, 0, "1/2", 1), ("1/3", 0, 1, 1)], [(0, 0), (0, 0)])
    text = str(exc.value)
    assert "overlap" in text and "area deficit" in text


def test_gap_in_partition_rejected():
    with pytest.raises(InvalidExchange, match="area deficit"):
        make_rectangle_exchange([(0, 0, "1/2", 1)], [(0, 0)])


def test_target_outside_rejected():
    with pytest.raises(InvalidExchange, match="outside space"):
        make_rectangle_exchange([(0, 0, "1/2", 1), ("1/2", 0, 1, 1)], [("3/4", 0), (0, 0)])


def test_euclidean_requires_isometries():
    with pytest.raises(ValueError):
        make_euclidean_exchange(
            rectangle(0, 0, 1, 1),
            [rectangle(0, 0, 1, 1)],
            [AffineMap2.of(((2, 0), (0, "1/2")))],
        )


def test_rotation_exchange_is_a_circle_rotation():
    g = builtin("rotation", alpha="2/5")
    orbit = evaluate(g, ("1/7", "1/3"), 10)
    xs = [p.x for p in orbit.points]
    assert all((b - a) % 1 == mpq(3, 5) for a, b in zip(xs, xs[1:]))
    assert {p.y for p in orbit.points} == {mpq(1, 3)}


def test_strip_rotation_fixes_upper_block():
    g = builtin("strip-rotation")
    p = point("1/2", "1/2")
    assert evaluate(g, p, 3).points == (p,) * 4


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "missing header"),
        ("gpex-gpe 1\nspace 0 0 1 0 1 1\natom 0 0 1 0 1 1\n", "needs a map"),
        ("gpex-gpe 1\nspace 0 0 1 0 1\n", "odd number"),
        ("gpex-gpe 1\nspace 0 0 1 0 1 1\nfoo 1\n", "unknown key"),
        ("gpex-gpe 1\nspace 0 0 1 0 1 x\n", "bad rational"),
        ("gpex-gpe 1\natom 0 0 1 0 1 1\nmap 1 0 0 1 0 0\n", "no space"),
        ("gpex-gpe 1\nspace 0 0 1 0 1 1\natom 0 0 1 0 1 1\nmap 1 0 0 1\n", "6 rationals"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(GpeParseError, match=message):
        parse_gpe(text)


def test_parse_validates():
    text = format_gpe(builtin("rotation")).replace("map 1 0 0 1 3/5 0", "map 1 0 0 1 1/2 0")
    with pytest.raises(InvalidExchange):
        parse_gpe(text)
    assert not validate(parse_gpe(text, check=False)).ok
