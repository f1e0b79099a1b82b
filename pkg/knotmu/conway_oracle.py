"""The type-2 invariant c2 of classical knots, computed two independent ways.

* ``c2_gauss`` counts pairs of interleaved arrows of a based signed Gauss
  diagram, weighted by the product of their signs.
* ``c2_alexander`` evaluates half the second derivative at t = 1 of the
  normalized Alexander polynomial, which ``alexander_polynomial`` computes as
  an exact sympy determinant.

``conway_z2_coefficient`` is a third path through the Conway substitution
t^(1/2) - t^(-1/2) = z.

Gauss codes are written as passage tokens ``O3+`` / ``U3+`` (over or under,
crossing label, crossing sign) in the order met from the basepoint. The arrow
of a crossing runs from its over passage to its under passage.
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import NormalizationError, ParseError, StructuralError, UnsupportedInputError

logger = logging.getLogger("knotmu.conway_oracle")

_TOKEN = re.compile(r"^([OoUu])(\d+)([+-])$")
_PD_TOKEN = re.compile(r"X\[\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\]")


def _sympy():
    try:
        import sympy
    except ImportError as e:
        raise RuntimeError("sympy is required for Alexander polynomial computations") from e
    return sympy


# ------------------------------
# Gauss diagrams
# ------------------------------
@dataclass(frozen=True)
class Passage:
    crossing: int
    over: bool
    sign: int

    def token(self) -> str:
        return f"{'O' if self.over else 'U'}{self.crossing}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class GaussDiagram:
    """Based signed Gauss diagram of a knot.

    ``passages`` lists the 2n crossing passages in order along the knot,
    starting after the basepoint.
    """

    passages: Tuple[Passage, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "passages", tuple(self.passages))
        seen: Dict[int, List[Passage]] = {}
        for p in self.passages:
            if p.sign not in (1, -1):
                raise StructuralError(f"crossing {p.crossing} has sign {p.sign}, expected +1 or -1")
            seen.setdefault(p.crossing, []).append(p)
        for crossing, ps in seen.items():
            if len(ps) != 2 or ps[0].over == ps[1].over:
                raise StructuralError(f"crossing {crossing} must appear once over and once under")
            if ps[0].sign != ps[1].sign:
                raise StructuralError(f"crossing {crossing} has inconsistent signs")

    @property
    def n(self) -> int:
        return len(self.passages) // 2

    @property
    def crossings(self) -> List[int]:
        order: List[int] = []
        for p in self.passages:
            if p.crossing not in order:
                order.append(p.crossing)
        return order

    def signs(self) -> Dict[int, int]:
        return {p.crossing: p.sign for p in self.passages}

    def arrows(self) -> Dict[int, Tuple[int, int]]:
        """Crossing -> (over position, under position)."""
        over: Dict[int, int] = {}
        under: Dict[int, int] = {}
        for i, p in enumerate(self.passages):
            (over if p.over else under)[p.crossing] = i
        return {c: (over[c], under[c]) for c in over}

    @property
    def chords(self) -> List[Tuple[int, int, int]]:
        """Chords as (over position, under position, sign)."""
        signs = self.signs()
        return [(a, b, signs[c]) for c, (a, b) in self.arrows().items()]

    def relabeled(self, offset: int) -> "GaussDiagram":
        return GaussDiagram(tuple(Passage(p.crossing + offset, p.over, p.sign) for p in self.passages))

    def to_dict(self) -> Dict[str, Any]:
        return {"code": serialize_gauss(self), "n": self.n}


def parse_gauss(text: str) -> GaussDiagram:
    """Parse a Gauss code file.

    Two forms are read. The token form lists passages (``U1+ O3+ U2+ ...``).
    The chord form is ``n; a b s; a b s; ...`` with ``a`` the over position,
    ``b`` the under position (both in 0..2n-1) and ``s`` the sign. Lines
    starting with '#' are comments; an empty file is the unknot.
    """
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines()).strip()
    if not body:
        return GaussDiagram()
    if ";" in body:
        return _parse_chord_form(body)
    passages = []
    for index, token in enumerate(body.replace(",", " ").split()):
        m = _TOKEN.match(token)
        if not m:
            raise ParseError(f"bad passage token {token!r}, expected e.g. 'O1+' or 'U2-'", field=f"token {index}")
        passages.append(Passage(int(m.group(2)), m.group(1).upper() == "O", 1 if m.group(3) == "+" else -1))
    try:
        return GaussDiagram(tuple(passages))
    except StructuralError as e:
        raise ParseError(str(e), field="code") from e


def _parse_sign(word: str, index: int) -> int:
    if word in ("+", "+1", "1"):
        return 1
    if word in ("-", "-1"):
        return -1
    raise ParseError(f"bad sign {word!r}", field=f"chord {index}")


def _parse_chord_form(body: str) -> GaussDiagram:
    fields = [f.strip() for f in body.split(";") if f.strip()]
    try:
        n = int(fields[0])
    except ValueError:
        raise ParseError(f"chord count {fields[0]!r} is not an integer", field="n") from None
    chords = fields[1:]
    if len(chords) != n:
        raise ParseError(f"declared {n} chords, found {len(chords)}", field="n")
    slots: List[Optional[Passage]] = [None] * (2 * n)
    for index, chord in enumerate(chords, start=1):
        parts = chord.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'a b s', got {chord!r}", field=f"chord {index}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer position in {chord!r}", field=f"chord {index}") from None
        sign = _parse_sign(parts[2], index)
        for pos, over in ((a, True), (b, False)):
            if not 0 <= pos < 2 * n:
                raise ParseError(f"position {pos} outside 0..{2 * n - 1}", field=f"chord {index}")
            if slots[pos] is not None:
                raise ParseError(f"position {pos} used twice", field=f"chord {index}")
            slots[pos] = Passage(index, over, sign)
    return GaussDiagram(tuple(slots))  # type: ignore[arg-type]


def serialize_gauss(gd: GaussDiagram) -> str:
    return " ".join(p.token() for p in gd.passages)


def c2_gauss(gd: GaussDiagram) -> int:
    """Signed count of crossed arrow pairs of a based Gauss diagram.

    Arrows (s1 -> e1) and (s2 -> e2) contribute sign1 * sign2 when
    e2 < s1 < s2 < e1 in the based order, or symmetrically.
    """
    if not gd.passages:
        return 0
    arrows = gd.arrows()
    signs = gd.signs()
    total = 0
    for c1, c2 in itertools.combinations(gd.crossings, 2):
        a1s, a1e = arrows[c1]
        a2s, a2e = arrows[c2]
        if a2s > a1s and a2e < a1s and a1e > a2s:
            total += signs[c1] * signs[c2]
        elif a1s > a2s and a1e < a2s and a2e > a1s:
            total += signs[c1] * signs[c2]
    return total


def add_isolated_chord(gd: GaussDiagram, position: int, sign: int = 1, over_first: bool = True) -> GaussDiagram:
    """Reidemeister I: insert a kink whose two passages are adjacent."""
    if not 0 <= position <= len(gd.passages):
        raise ValueError(f"position must be in 0..{len(gd.passages)}, got {position}")
    label = max(gd.crossings, default=0) + 1
    pair = [Passage(label, over_first, sign), Passage(label, not over_first, sign)]
    seq = list(gd.passages)
    return GaussDiagram(tuple(seq[:position] + pair + seq[position:]))


def add_r2_pair(gd: GaussDiagram, over_position: int, under_position: int, parallel: bool = True) -> GaussDiagram:
    """Reidemeister II: one strand passes twice over another.

    The over passages are inserted together at ``over_position`` and the under
    passages together at ``under_position`` (both indices into the current
    code); ``parallel`` says whether the two strands run the same way. The two
    new crossings have opposite signs.
    """
    size = len(gd.passages)
    for pos in (over_position, under_position):
        if not 0 <= pos <= size:
            raise ValueError(f"positions must be in 0..{size}, got {pos}")
    a = max(gd.crossings, default=0) + 1
    b = a + 1
    overs = [Passage(a, True, 1), Passage(b, True, -1)]
    unders = [Passage(a, False, 1), Passage(b, False, -1)]
    if not parallel:
        unders.reverse()
    seq = list(gd.passages)
    inserts = sorted([(over_position, 0, overs), (under_position, 1, unders)], key=lambda x: (x[0], x[1]), reverse=True)
    for pos, _, block in inserts:
        seq[pos:pos] = block
    return GaussDiagram(tuple(seq))


def connect_sum_gauss(g1: GaussDiagram, g2: GaussDiagram) -> GaussDiagram:
    """Based connected sum: g2's passages follow g1's."""
    shifted = g2.relabeled(max(g1.crossings, default=0))
    return GaussDiagram(g1.passages + shifted.passages)


def gauss_code_of_polygon(knot: Any) -> GaussDiagram:
    """Gauss code of a closed polygonal knot under projection to the x1 x2 plane.

    A crossing is positive when the over strand turns counterclockwise onto
    the under strand. The basepoint is vertex 0.
    """
    if getattr(knot, "long", False):
        raise ValueError("gauss_code_of_polygon expects a closed knot")
    pts = [tuple(v) for v in knot.vertices]
    n = len(pts)
    events: List[Tuple[float, int, bool]] = []
    signs: Dict[int, int] = {}
    label = 0
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            a, b = pts[i], pts[(i + 1) % n]
            c, d = pts[j], pts[(j + 1) % n]
            bx, by = b[0] - a[0], b[1] - a[1]
            dx, dy = d[0] - c[0], d[1] - c[1]
            den = bx * dy - by * dx
            if den == 0:
                continue
            u = ((c[0] - a[0]) * dy - (c[1] - a[1]) * dx) / den
            v = ((c[0] - a[0]) * by - (c[1] - a[1]) * bx) / den
            if not (0 <= u < 1 and 0 <= v < 1):
                continue
            zi = a[2] + u * (b[2] - a[2])
            zj = c[2] + v * (d[2] - c[2])
            if math.isclose(zi, zj, abs_tol=1e-12):
                raise StructuralError(f"segments {i} and {j} intersect in 3D")
            over_dir, under_dir = ((bx, by), (dx, dy)) if zi > zj else ((dx, dy), (bx, by))
            label += 1
            signs[label] = 1 if over_dir[0] * under_dir[1] - over_dir[1] * under_dir[0] > 0 else -1
            events.append((i + u, label, zi > zj))
            events.append((j + v, label, zj > zi))
    events.sort()
    return GaussDiagram(tuple(Passage(c, over, signs[c]) for _, c, over in events))


# ------------------------------
# PD codes
# ------------------------------
@dataclass(frozen=True)
class PDCrossing:
    """X[i, j, k, l]: i is the incoming under edge, labels run counterclockwise."""

    labels: Tuple[int, int, int, int]
    sign: Optional[int] = None


@dataclass(frozen=True)
class PDCode:
    crossings: Tuple[PDCrossing, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "crossings", tuple(self.crossings))
        counts: Dict[int, int] = {}
        for x in self.crossings:
            for label in x.labels:
                counts[label] = counts.get(label, 0) + 1
        bad = sorted(label for label, c in counts.items() if c != 2)
        if bad:
            raise StructuralError(f"PD labels must occur exactly twice; offending labels {bad}")

    @property
    def labels(self) -> List[int]:
        return sorted({label for x in self.crossings for label in x.labels})

    def components(self) -> int:
        """Number of link components, by joining the edges each strand passes through."""
        parent = {label: label for label in self.labels}

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for x in self.crossings:
            i, j, k, l = x.labels
            for a, b in ((i, k), (j, l)):
                parent[find(a)] = find(b)
        return len({find(label) for label in parent})


def parse_pd(text: str) -> PDCode:
    """Parse PD text: ``X[i,j,k,l]`` tokens, or one crossing per line as ``i j k l [+|-]``."""
    crossings: List[PDCrossing] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "X[" in line:
            tokens = _PD_TOKEN.findall(line)
            leftover = _PD_TOKEN.sub("", line).replace(",", " ").strip()
            if leftover:
                raise ParseError(f"unexpected text {leftover!r}", line=lineno, field="crossing")
            crossings.extend(PDCrossing(tuple(int(v) for v in t)) for t in tokens)  # type: ignore[arg-type]
            continue
        parts = line.split()
        if len(parts) not in (4, 5):
            raise ParseError(f"expected 'a b c d [sign]', got {line!r}", line=lineno, field="crossing")
        try:
            labels = tuple(int(p) for p in parts[:4])
        except ValueError:
            raise ParseError(f"non-integer label in {line!r}", line=lineno, field="crossing") from None
        sign = _parse_sign(parts[4], lineno) if len(parts) == 5 else None
        crossings.append(PDCrossing(labels, sign))  # type: ignore[arg-type]
    try:
        return PDCode(tuple(crossings))
    except StructuralError as e:
        raise ParseError(str(e)) from e


def gauss_from_pd(pd: PDCode) -> GaussDiagram:
    """Gauss code of a one-component PD code with edges labeled 1..2n in order.

    Each edge ends at one crossing passage: the under passage of X[i,j,k,l]
    ends edge i, the over passage ends whichever of j, l the strand leaves
    the crossing from the other. Crossing signs follow the over direction:
    j -> l is positive. An explicit sign on the crossing wins.
    """
    if not pd.crossings:
        return GaussDiagram()
    if pd.components() != 1:
        raise UnsupportedInputError(f"PD code has {pd.components()} components; only knots are supported")
    edges = 2 * len(pd.crossings)
    if pd.labels != list(range(1, edges + 1)):
        raise StructuralError(f"PD edge labels must run 1..{edges}")

    ends: Dict[int, Passage] = {}
    for number, x in enumerate(pd.crossings, start=1):
        i, j, k, l = x.labels
        options = []
        if j % edges + 1 == l and j != i:
            options.append((j, 1))
        if l % edges + 1 == j and l != i:
            options.append((l, -1))
        if not options:
            raise StructuralError(f"crossing {number} X{list(x.labels)}: over strand labels are not consecutive")
        over_edge, sign = options[0]
        if x.sign is not None:
            sign = x.sign
        for edge, over in ((i, False), (over_edge, True)):
            if edge in ends:
                raise StructuralError(f"edge {edge} ends at two crossing passages")
            ends[edge] = Passage(number, over, sign)
    return GaussDiagram(tuple(ends[e] for e in range(1, edges + 1)))


# ------------------------------
# Laurent polynomials
# ------------------------------
@dataclass(frozen=True)
class LaurentPoly:
    """Integer Laurent polynomial in t, stored as sorted (exponent, coefficient) pairs."""

    terms: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        merged: Dict[int, int] = {}
        for exp, coeff in self.terms:
            merged[int(exp)] = merged.get(int(exp), 0) + int(coeff)
        object.__setattr__(self, "terms", tuple(sorted((e, c) for e, c in merged.items() if c != 0)))

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, int]) -> "LaurentPoly":
        return cls(tuple(coeffs.items()))

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls(((0, 1),))

    def to_dict(self) -> Dict[int, int]:
        return dict(self.terms)

    def __getitem__(self, exp: int) -> int:
        return dict(self.terms).get(exp, 0)

    def value_at_one(self) -> int:
        return sum(c for _, c in self.terms)

    def evaluate(self, t: Any) -> Any:
        """Exact value at t (int, str or sympy number) as a sympy Rational."""
        sp = _sympy()
        x = sp.Rational(t)
        return sum((sp.Integer(c) * x**e for e, c in self.terms), sp.Integer(0))

    def is_symmetric(self) -> bool:
        return all(self[-e] == c for e, c in self.terms)

    def is_normalized(self) -> bool:
        return self.is_symmetric() and self.value_at_one() == 1

    def shift(self, k: int) -> "LaurentPoly":
        return LaurentPoly(tuple((e + k, c) for e, c in self.terms))

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(tuple((e, -c) for e, c in self.terms))

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: Dict[int, int] = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms, other.terms):
            out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly.from_dict(out)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for exp, coeff in sorted(self.terms, reverse=True):
            mag = abs(coeff)
            if exp == 0:
                body = str(mag)
            else:
                power = "t" if exp == 1 else f"t^{exp}"
                body = power if mag == 1 else f"{mag}*{power}"
            sign = "-" if coeff < 0 else "+"
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text


def normalize_alexander(poly: LaurentPoly) -> LaurentPoly:
    """Shift to the symmetric form and fix the sign so that the value at 1 is +1."""
    if not poly.terms:
        raise NormalizationError("Alexander polynomial vanishes (split link or invalid presentation)")
    low, high = poly.terms[0][0], poly.terms[-1][0]
    if (low + high) % 2:
        raise NormalizationError(f"span {high - low} is odd; cannot center {poly}")
    centered = poly.shift(-(low + high) // 2)
    value = centered.value_at_one()
    if value == -1:
        centered = -centered
    elif value != 1:
        raise NormalizationError(f"value at t=1 is {value}, not +-1: {poly}")
    if not centered.is_symmetric():
        raise NormalizationError(f"{centered} is not symmetric")
    return centered


def alexander_from_gauss(gd: GaussDiagram) -> LaurentPoly:
    """Alexander polynomial from a Gauss code, by an exact sympy determinant.

    Row r belongs to crossing r, column a to the arc a between consecutive
    under passages. An over passage contributes 1 - 1/t (positive) or 1 - t
    (negative) to its arc; an under passage contributes -1 to the arc it ends
    and 1/t or t to the arc it starts. The first row and column are struck.
    """
    n = gd.n
    if n == 0:
        return LaurentPoly.one()
    sym = _sympy()
    t = sym.Symbol("t")
    matrix = sym.zeros(n, n)
    rows: Dict[int, int] = {}
    arc = 0
    for p in gd.passages:
        row = rows.setdefault(p.crossing, len(rows))
        if p.over:
            matrix[row, arc % n] += (1 - 1 / t) if p.sign > 0 else (1 - t)
        else:
            matrix[row, arc % n] += -1
            arc += 1
            matrix[row, arc % n] += (1 / t) if p.sign > 0 else t
    det = matrix[1:, 1:].det(method="berkowitz")
    poly = sym.Poly(sym.expand(det * t**n), t)
    coeffs = {exp[0] - n: int(c) for exp, c in poly.terms()}
    raw = LaurentPoly.from_dict(coeffs)
    logger.debug("Raw Alexander determinant for %d crossings: %s", n, raw)
    return normalize_alexander(raw)


def alexander_polynomial(pd: PDCode) -> LaurentPoly:
    """Normalized Alexander polynomial of a PD-coded knot.

    Raises UnsupportedInputError for links with more than one component.
    """
    return alexander_from_gauss(gauss_from_pd(pd))


def c2_alexander(delta: LaurentPoly) -> int:
    """Half the second derivative at t = 1: (1/2) * sum c_k k (k - 1)."""
    if not delta.is_normalized():
        raise NormalizationError(f"{delta} is not a normalized Alexander polynomial")
    twice = sum(c * e * (e - 1) for e, c in delta.terms)
    if twice % 2:
        raise NormalizationError(f"Delta''(1) = {twice} is odd for {delta}")
    return twice // 2


def conway_z2_coefficient(delta: LaurentPoly) -> int:
    """Coefficient of z^2 after substituting t + 1/t = z^2 + 2 into a symmetric Delta."""
    if not delta.is_symmetric():
        raise NormalizationError(f"{delta} is not symmetric")
    sym = _sympy()
    z = sym.Symbol("z")
    x = z**2 + 2
    # t^k + t^-k as a polynomial in x = t + 1/t.
    powers = [sym.Integer(2), x]
    top = max((e for e, _ in delta.terms), default=0)
    for _ in range(2, top + 1):
        powers.append(sym.expand(x * powers[-1] - powers[-2]))
    conway = sym.Integer(delta[0])
    for k in range(1, top + 1):
        conway += delta[k] * powers[k]
    return int(sym.Poly(sym.expand(conway), z).coeff_monomial(z**2))


__all__ = [
    "GaussDiagram",
    "LaurentPoly",
    "PDCode",
    "PDCrossing",
    "Passage",
    "add_isolated_chord",
    "add_r2_pair",
    "alexander_from_gauss",
    "alexander_polynomial",
    "c2_alexander",
    "c2_gauss",
    "connect_sum_gauss",
    "conway_z2_coefficient",
    "gauss_code_of_polygon",
    "gauss_from_pd",
    "normalize_alexander",
    "parse_gauss",
    "parse_pd",
    "serialize_gauss",
]
