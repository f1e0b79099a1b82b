import pytest

from knotmu import corpus
from knotmu.conway_oracle import (
    LaurentPoly,
    add_isolated_chord,
    add_r2_pair,
    alexander_from_gauss,
    alexander_polynomial,
    c2_alexander,
    c2_gauss,
    connect_sum_gauss,
    conway_z2_coefficient,
    gauss_code_of_polygon,
    gauss_from_pd,
    normalize_alexander,
    parse_gauss,
    parse_pd,
    serialize_gauss,
)
from knotmu.errors import NormalizationError, ParseError, UnsupportedInputError

TREFOIL = "U1+ O3+ U2+ O1+ U3+ O2+"
KNOTTED = sorted(name for name in corpus.KNOTS if name != "unknot")


def read(name, suffix):
    return corpus.knot_path(name, suffix).read_text(encoding="utf-8")


def test_token_and_chord_forms_agree():
    tokens = parse_gauss(TREFOIL)
    chords = parse_gauss("3; 3 0 +; 5 2 +; 1 4 +")
    assert serialize_gauss(chords) == serialize_gauss(tokens) == TREFOIL
    assert tokens.n == 3


@pytest.mark.parametrize("text", ["O1+ U1+ X2+", "O1+ O1+", "O1+ U1-", "2; 0 1 +", "1; 0 0 +"])
def test_bad_gauss_codes(text):
    with pytest.raises(ParseError):
        parse_gauss(text)


def test_empty_code_is_unknot():
    gd = parse_gauss("# nothing here\n")
    assert gd.n == 0
    assert c2_gauss(gd) == 0
    assert alexander_from_gauss(gd) == LaurentPoly.one()


@pytest.mark.parametrize("name", sorted(corpus.KNOTS))
def test_shipped_codes_give_c2(name):
    expected = corpus.KNOTS[name].c2
    gd = parse_gauss(read(name, ".gauss"))
    assert c2_gauss(gd) == expected
    pd = parse_pd(read(name, ".pd"))
    assert c2_gauss(gauss_from_pd(pd)) == expected
    delta = alexander_polynomial(pd)
    assert c2_alexander(delta) == expected
    assert conway_z2_coefficient(delta) == expected


@pytest.mark.parametrize("name", KNOTTED)
def test_gauss_and_pd_give_same_alexander(name):
    assert alexander_from_gauss(parse_gauss(read(name, ".gauss"))) == alexander_polynomial(parse_pd(read(name, ".pd")))


@pytest.mark.parametrize("name", sorted(corpus.KNOTS))
def test_polygon_projection_gives_c2(name):
    assert c2_gauss(gauss_code_of_polygon(corpus.load_knot(name))) == corpus.KNOTS[name].c2


def test_known_polynomials():
    assert str(alexander_polynomial(parse_pd(read("3_1", ".pd")))) == "t - 1 + t^-1"
    assert str(alexander_polynomial(parse_pd(read("4_1", ".pd")))) == "-t + 3 - t^-1"
    assert str(alexander_polynomial(parse_pd(read("5_2", ".pd")))) == "2*t - 3 + 2*t^-1"


def test_kink_has_trivial_polynomial():
    pd = parse_pd("X[1,1,2,2]")
    assert alexander_polynomial(pd) == LaurentPoly.one()
    assert c2_gauss(gauss_from_pd(pd)) == 0


def test_line_form_with_explicit_signs():
    pd = parse_pd("1 4 2 5 +\n3 6 4 1 +\n5 2 6 3 +\n")
    assert c2_gauss(gauss_from_pd(pd)) == 1


def test_links_are_rejected():
    # Hopf link
    pd = parse_pd("X[4,1,3,2] X[2,3,1,4]")
    assert pd.components() == 2
    with pytest.raises(UnsupportedInputError):
        alexander_polynomial(pd)


@pytest.mark.parametrize("position", [0, 2, 5, 6])
@pytest.mark.parametrize("sign", [1, -1])
def test_kinks_do_not_change_c2(position, sign):
    gd = parse_gauss(TREFOIL)
    assert c2_gauss(add_isolated_chord(gd, position, sign)) == 1
    assert c2_gauss(add_isolated_chord(gd, position, sign, over_first=False)) == 1


@pytest.mark.parametrize("over_position,under_position", [(0, 3), (4, 1), (2, 2), (6, 0)])
@pytest.mark.parametrize("parallel", [True, False])
def test_r2_pairs_do_not_change_c2(over_position, under_position, parallel):
    gd = parse_gauss(TREFOIL)
    moved = add_r2_pair(gd, over_position, under_position, parallel)
    assert moved.n == gd.n + 2
    assert c2_gauss(moved) == 1


def test_connected_sum_adds():
    trefoil = parse_gauss(TREFOIL)
    eight = parse_gauss(read("4_1", ".gauss"))
    assert c2_gauss(connect_sum_gauss(trefoil, trefoil)) == 2
    assert c2_gauss(connect_sum_gauss(trefoil, eight)) == 0


def test_laurent_arithmetic_and_normalization():
    delta = LaurentPoly.from_dict({1: 1, 0: -1, -1: 1})
    assert delta.is_normalized()
    assert normalize_alexander(-delta.shift(3)) == delta
    assert (delta * delta)[0] == 3
    with pytest.raises(NormalizationError):
        normalize_alexander(LaurentPoly.from_dict({0: 2}))
    with pytest.raises(NormalizationError):
        c2_alexander(LaurentPoly.from_dict({1: 1, 0: 1}))


def test_evaluate_is_exact():
    sympy = pytest.importorskip("sympy")
    delta = LaurentPoly.from_dict({1: 1, 0: -1, -1: 1})
    assert delta.evaluate(2) == sympy.Rational(3, 2)
    assert delta.evaluate("1/2") == delta.evaluate(2), "symmetric polynomials agree at t and 1/t"
    assert delta.evaluate(1) == delta.value_at_one() == 1
    assert isinstance(delta.evaluate(3), sympy.Rational)
