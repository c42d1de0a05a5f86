"""Function-field arithmetic on a Weierstrass curve y^2 = x^3 + a x + b.

Everything revolves around the identity point e at infinity: local
expansions there use the chart t = x/y, pole orders at e are read off
degrees, and divisors are recorded class-by-class through the exact
order of torsion points.  The cyclotomic functions t_s (one per exact
order s) carry all divisor shifting; Riemann-Roch windows are spans of
monomials over a single t-product denominator.
"""

from __future__ import annotations

import json
import threading
from functools import lru_cache

from .errors import (
    DepthExceeded,
    PrecisionExhausted,
    UnsupportedPoles,
    ValidationFailed,
)
from .exactcore import (
    LaurentSeries,
    Poly,
    Q,
    QONE,
    QZERO,
    parse_poly,
    poly_gcd,
    poly_inverse_mod,
    qtext,
    series_reciprocal,
    squarefree_decomposition,
    trace_in_quotient,
)

# ---------------------------------------------------------------------------
# torsion bookkeeping


@lru_cache(maxsize=None)
def exact_order_count(s: int) -> int:
    """Number of points of exact order s: Moebius inversion of |A[n]| = n^2."""
    if s < 1:
        raise ValueError("order must be positive")
    total = 0
    for d in range(1, s + 1):
        if s % d == 0:
            total += _moebius(s // d) * d * d
    return total


@lru_cache(maxsize=None)
def _moebius(n: int) -> int:
    if n == 1:
        return 1
    result = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    if n > 1:
        result = -result
    return result


def divisors_of(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


class TorsionDivisor:
    """Formal sum of full torsion-order classes: map s -> n_s.

    The class of order 1 is the identity point itself, so the s = 1
    coefficient counts plain multiples of (e).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        clean = {}
        for s, n in (coeffs or {}).items():
            s = int(s)
            n = int(n)
            if s < 1:
                raise ValueError("order classes start at 1")
            if n:
                clean[s] = n
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __setattr__(self, name, value):
        raise AttributeError("TorsionDivisor is immutable")

    def coefficient(self, s: int) -> int:
        return self.coeffs.get(s, 0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.coeffs)

    @property
    def degree(self) -> int:
        return sum(n * exact_order_count(s) for s, n in self.coeffs.items())

    def __add__(self, other):
        out = dict(self.coeffs)
        for s, n in other.coeffs.items():
            out[s] = out.get(s, 0) + n
        return TorsionDivisor(out)

    def __sub__(self, other):
        out = dict(self.coeffs)
        for s, n in other.coeffs.items():
            out[s] = out.get(s, 0) - n
        return TorsionDivisor(out)

    def scale(self, k: int) -> "TorsionDivisor":
        return TorsionDivisor({s: k * n for s, n in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, TorsionDivisor):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def is_effective(self) -> bool:
        return all(n >= 0 for n in self.coeffs.values())

    def __repr__(self):
        if not self.coeffs:
            return "TorsionDivisor(0)"
        body = " + ".join(f"{n}*A<{s}>" for s, n in self.coeffs.items())
        return f"TorsionDivisor({body})"


def single_class(s: int, n: int = 1) -> TorsionDivisor:
    return TorsionDivisor({s: n})


# ---------------------------------------------------------------------------
# the curve and its function field


class WeierstrassCurve:
    """Smooth curve y^2 = x^3 + a x + b over Q."""

    __slots__ = ("a", "b", "rhs")

    def __init__(self, a, b):
        a, b = Q(a), Q(b)
        disc = -16 * (4 * a**3 + 27 * b**2)
        if disc == 0:
            raise ValidationFailed(f"singular curve: a={qtext(a)}, b={qtext(b)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "rhs", Poly((b, a, QZERO, QONE)))

    def __setattr__(self, name, value):
        raise AttributeError("WeierstrassCurve is immutable")

    @property
    def discriminant(self) -> Q:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    def __eq__(self, other):
        if not isinstance(other, WeierstrassCurve):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def key(self) -> str:
        return f"{qtext(self.a)};{qtext(self.b)}"

    def __repr__(self):
        return f"WeierstrassCurve(a={qtext(self.a)}, b={qtext(self.b)})"

    # convenient field elements
    def elt(self, u, v=None, d=None) -> "FuncElt":
        return FuncElt(self, u if isinstance(u, Poly) else Poly.const(u),
                       v if v is not None else Poly(),
                       d if d is not None else Poly.const(1))

    def x(self) -> "FuncElt":
        return self.elt(Poly((QZERO, QONE)))

    def y(self) -> "FuncElt":
        return FuncElt(self, Poly(), Poly.const(1), Poly.const(1))

    def zero(self) -> "FuncElt":
        return self.elt(Poly())

    def one(self) -> "FuncElt":
        return self.elt(Poly.const(1))


class FuncElt:
    """Element (u(x) + v(x) y) / d(x) of the function field.

    Canonical form: d monic, gcd(gcd(u, v), d) = 1, and no y^2 anywhere
    (reduced through the curve equation).  Zero is (0 + 0y)/1.
    """

    __slots__ = ("curve", "u", "v", "d")

    def __init__(self, curve, u: Poly, v: Poly, d: Poly):
        if d.is_zero():
            raise ZeroDivisionError("zero denominator")
        g = poly_gcd(poly_gcd(u, v), d)
        if g.degree > 0:
            u, v, d = u // g, v // g, d // g
        lead = d.leading()
        if lead != 1:
            inv = QONE / lead
            u, v, d = u.scale(inv), v.scale(inv), d.monic()
        object.__setattr__(self, "curve", curve)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):
        raise AttributeError("FuncElt is immutable")

    def is_zero(self) -> bool:
        return self.u.is_zero() and self.v.is_zero()

    def is_pure(self) -> bool:
        """True when the denominator is 1 (poles only at e)."""
        return self.d.degree == 0

    def is_constant(self) -> bool:
        return self.is_pure() and self.v.is_zero() and self.u.degree <= 0

    def constant_value(self) -> Q:
        if not self.is_constant():
            raise ValueError("not a constant")
        return self.u.coeff(0)

    def __eq__(self, other):
        if not isinstance(other, FuncElt):
            return NotImplemented
        return (
            self.curve == other.curve
            and self.u == other.u
            and self.v == other.v
            and self.d == other.d
        )

    def __hash__(self):
        return hash((self.curve, self.u, self.v, self.d))

    def __add__(self, other):
        other = self._coerce(other)
        u = self.u * other.d + other.u * self.d
        v = self.v * other.d + other.v * self.d
        return FuncElt(self.curve, u, v, self.d * other.d)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return FuncElt(self.curve, -self.u, -self.v, self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        rhs = self.curve.rhs
        u = self.u * other.u + (self.v * other.v) * rhs
        v = self.u * other.v + self.v * other.u
        return FuncElt(self.curve, u, v, self.d * other.d)

    def __rmul__(self, other):
        return self * other

    def inverse(self) -> "FuncElt":
        """1/f by rationalising with the y-conjugate."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        norm = self.u * self.u - (self.v * self.v) * self.curve.rhs
        # (u + vy)(u - vy) = norm, a poly in x alone and nonzero for f != 0
        return FuncElt(self.curve, self.d * self.u, -(self.d * self.v), norm)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __pow__(self, n: int) -> "FuncElt":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.curve.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "FuncElt":
        return FuncElt(self.curve, self.u, -self.v, self.d)

    def norm_poly(self) -> Poly:
        """(u + vy)(u - vy) as a polynomial in x (denominator ignored)."""
        return self.u * self.u - (self.v * self.v) * self.curve.rhs

    def ord_e(self) -> int:
        """Valuation at the identity: x has a double pole, y a triple one.

        Computed from degrees alone; the u and vy parts always have poles
        of opposite parity so the minimum is never ambiguous.
        """
        if self.is_zero():
            raise ZeroDivisionError("the zero element has no valuation")
        candidates = []
        if not self.u.is_zero():
            candidates.append(-2 * self.u.degree)
        if not self.v.is_zero():
            candidates.append(-3 - 2 * self.v.degree)
        return min(candidates) + 2 * self.d.degree

    def pole_order_at_e(self) -> int:
        return max(0, -self.ord_e())

    def _coerce(self, other) -> "FuncElt":
        if isinstance(other, FuncElt):
            if other.curve != self.curve:
                raise ValueError("elements live on different curves")
            return other
        return self.curve.elt(Poly.const(Q(other)))

    def text(self) -> str:
        return f"({self.u.text()}; {self.v.text()}; {self.d.text()})"

    def __repr__(self):
        return f"FuncElt{self.text()}"


def parse_func_elt(curve: WeierstrassCurve, text: str) -> FuncElt:
    """Parse the '(u; v; d)' wire format."""
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ValueError(f"not a function-element literal: {text!r}")
    parts = text[1:-1].split(";")
    if len(parts) != 3:
        raise ValueError("expected three components (u; v; d)")
    u, v, d = (parse_poly(p.strip()) for p in parts)
    return FuncElt(curve, u, v, d)


# ---------------------------------------------------------------------------
# local expansion at the identity in the chart t = x/y


def _chart_series(curve: WeierstrassCurve, prec: int) -> tuple[LaurentSeries, LaurentSeries]:
    """Series for x and y in t = x/y.

    Uses the fixed point of s = t^3 + a t s^2 + b s^3 (s = 1/y), which
    gains accuracy every pass; then x = t y.
    """
    if prec < 1:
        raise ValueError("precision must be positive")
    width = prec + 8  # room for the t^3 offset and the iteration tail
    t = LaurentSeries(1, (QONE,) + (QZERO,) * (width - 1))
    t3 = LaurentSeries(3, (QONE,) + (QZERO,) * (width - 1))
    a, b = curve.a, curve.b
    s = t3
    for _ in range(width + 2):
        nxt = t3 + (t * (s * s)) * a + (s * (s * s)) * b
        if nxt == s:
            break
        s = nxt
    y = series_reciprocal(s)
    x = t * y
    return x.truncate(prec), y.truncate(prec)


def expand_at_e(elt: FuncElt, prec: int) -> LaurentSeries:
    """Laurent expansion of a field element at e in the chart t = x/y.

    The returned window has `prec` retained coefficients starting at the
    exact valuation.  The valuation always matches ord_e, which gives a
    cheap internal consistency check.
    """
    if elt.is_zero():
        raise ZeroDivisionError("cannot expand the zero element")
    ord_e = elt.ord_e()
    # evaluating u, vy, d never cancels leading terms (pole parities differ),
    # so relative precision survives every step below
    work = prec + 2
    x, y = _chart_series(elt.curve, work + 2 * max(elt.u.degree, elt.v.degree, elt.d.degree, 1))
    num = None
    if not elt.u.is_zero():
        num = _eval_poly_series(elt.u, x)
    if not elt.v.is_zero():
        vy = _eval_poly_series(elt.v, x) * y
        num = vy if num is None else num + vy
    den = _eval_poly_series(elt.d, x)
    series = num * series_reciprocal(den)
    if series.exact_valuation() != ord_e:
        raise PrecisionExhausted(
            f"expansion valuation {series.exact_valuation()} disagrees with ord_e {ord_e}"
        )
    return series.truncate(prec)


def _eval_poly_series(p: Poly, x: LaurentSeries) -> LaurentSeries:
    acc = None
    for c in reversed(p.coeffs):
        if acc is None:
            acc = LaurentSeries(0, (Q(c),) + (QZERO,) * (x.precision - 1))
        else:
            acc = acc * x + c
    if acc is None:
        raise ZeroDivisionError("evaluating the zero polynomial as a unit")
    return acc


# ---------------------------------------------------------------------------
# division polynomials


def division_psi_raw(curve: WeierstrassCurve, n: int, memo=None) -> FuncElt:
    """n-th division polynomial as a field element (poles only at e).

    psi_1 = 1, psi_2 = 2y, psi_3 and psi_4 explicit, then the standard
    doubling recurrences.  div(psi_n) counts the nonzero n-torsion once
    each against (n^2 - 1)(e).
    """
    if n < 0:
        raise ValueError("index must be nonnegative")
    memo = {} if memo is None else memo
    return _psi(curve, n, memo)


def _psi(curve: WeierstrassCurve, n: int, memo) -> FuncElt:
    if n in memo:
        return memo[n]
    a, b = curve.a, curve.b
    if n == 0:
        val = curve.zero()
    elif n == 1:
        val = curve.one()
    elif n == 2:
        val = curve.y() * 2
    elif n == 3:
        val = curve.elt(Poly((-a * a, 12 * b, 6 * a, QZERO, Q(3))))
    elif n == 4:
        # psi_4 = 4y (x^6 + 5a x^4 + 20b x^3 - 5a^2 x^2 - 4ab x - 8b^2 - a^3)
        inner = Poly(
            (
                -8 * b * b - a**3,
                -4 * a * b,
                -5 * a * a,
                20 * b,
                5 * a,
                QZERO,
                QONE,
            )
        )
        val = FuncElt(curve, Poly(), inner.scale(4), Poly.const(1))
    elif n % 2 == 1:
        m = (n - 1) // 2
        val = _psi(curve, m + 2, memo) * _psi(curve, m, memo) ** 3 - _psi(
            curve, m - 1, memo
        ) * _psi(curve, m + 1, memo) ** 3
    else:
        m = n // 2
        diff = _psi(curve, m + 2, memo) * _psi(curve, m - 1, memo) ** 2 - _psi(
            curve, m - 2, memo
        ) * _psi(curve, m + 1, memo) ** 2
        val = _psi(curve, m, memo) * diff / (curve.y() * 2)
    memo[n] = val
    return val


# ---------------------------------------------------------------------------
# coordinate data


class Coordinate:
    """Choice of uniformiser t_e at the identity.

    The default is x/y times an optional scalar.  A custom element may be
    supplied instead; it must have a simple zero at e, and its other
    zeros and poles must sit on torsion classes (checked up to the bound
    `validated_to` when the cache validates it).
    """

    __slots__ = ("base", "scale", "form", "validated_to")

    def __init__(self, curve: WeierstrassCurve, scale=1, base: FuncElt | None = None,
                 validated_to: int = 12):
        scale = Q(scale)
        if base is None:
            if scale == 0:
                raise ValidationFailed("coordinate scale must be nonzero")
            base = (curve.x() / curve.y()) * scale
            form = "x/y"
        else:
            form = "custom"
            if scale != 1:
                base = base * scale
        if base.is_zero() or base.ord_e() != 1:
            raise ValidationFailed("coordinate must vanish to first order at e")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "validated_to", int(validated_to))

    def __setattr__(self, name, value):
        raise AttributeError("Coordinate is immutable")

    def describe(self) -> dict:
        return {"form": self.form, "scale": qtext(self.scale)}


# ---------------------------------------------------------------------------
# the memoised cache of cyclotomic data


class CycCache:
    """Per-(curve, coordinate) memo of division polynomials, cyclotomic
    functions t_s, class polynomials, and chart series.

    Writes happen under a lock with insert-if-absent semantics, so
    concurrent readers only ever observe fully validated entries.
    """

    def __init__(self, curve: WeierstrassCurve, coordinate: Coordinate | None = None):
        self.curve = curve
        self.coordinate = coordinate or Coordinate(curve)
        self._lock = threading.RLock()
        self._psi: dict[int, FuncElt] = {}
        self._t: dict[int, FuncElt] = {}
        self._t_raw: dict[int, FuncElt] = {}
        self._class_poly: dict[int, Poly] = {}
        self._chart: tuple[int, LaurentSeries, LaurentSeries] | None = None
        self._diff_factor: Q | None = None
        self._coordinate_profile: dict[int, tuple[int, int]] = {}

    # -- division polynomials -------------------------------------------

    def psi(self, n: int) -> FuncElt:
        with self._lock:
            if n not in self._psi:
                memo = dict(self._psi)
                val = division_psi_raw(self.curve, n, memo)
                for k, v in memo.items():
                    self._psi.setdefault(k, v)
                self._psi.setdefault(n, val)
            return self._psi[n]

    # -- cyclotomic functions --------------------------------------------

    def t(self, s: int) -> FuncElt:
        """Cyclotomic function of the class of exact order s.

        For s = 1 this is the coordinate itself.  Otherwise it is the
        primitive factor of psi_s, normalised so t_e^{|A<s>|} t_s -> 1
        at the identity.
        """
        if s == 1:
            return self.coordinate.base
        with self._lock:
            if s not in self._t:
                raw = self._primitive_part(s)
                m = exact_order_count(s)
                # series product: expanding t_e^m * raw as one canonical
                # element would drag degree-50 polynomials through the
                # chart; two short expansions multiply in constant time
                series = expand_at_e(self.coordinate.base, 2) ** m * expand_at_e(raw, 2)
                if series.exact_valuation() != 0:
                    raise ValidationFailed(
                        f"t_{s} candidate has the wrong vanishing order at e"
                    )
                const = series.coeff(0)
                val = raw * (QONE / const)
                self._validate_t(s, val)
                self._t.setdefault(s, val)
            return self._t[s]

    def _primitive_part(self, s: int) -> FuncElt:
        with self._lock:
            if s not in self._t_raw:
                if s < 2:
                    raise ValueError("cyclotomic functions start at order 2")
                val = self.psi(s)
                for d in divisors_of(s):
                    if 1 < d < s:
                        val = val / self._primitive_part(d)
                if not val.is_pure():
                    raise ValidationFailed(
                        f"primitive part of psi_{s} is not polynomial"
                    )
                self._t_raw.setdefault(s, val)
            return self._t_raw[s]

    def _validate_t(self, s: int, val: FuncElt) -> None:
        m = exact_order_count(s)
        if not val.is_pure():
            raise ValidationFailed(f"t_{s} must have poles only at e")
        if val.ord_e() != -m:
            raise ValidationFailed(
                f"t_{s} has e-pole order {-val.ord_e()}, expected {m}"
            )
        series = expand_at_e(self.coordinate.base, 1) ** m * expand_at_e(val, 1)
        if series.exact_valuation() != 0 or series.coeff(0) != 1:
            raise ValidationFailed(f"t_{s} normalisation failed")
        if s == 2:
            if not val.u.is_zero() or val.v.degree != 0:
                raise ValidationFailed("t_2 must be a multiple of y")
        elif not val.v.is_zero():
            raise ValidationFailed(f"t_{s} must be even (a polynomial in x)")

    def class_poly(self, s: int) -> Poly:
        """Monic squarefree polynomial in x whose roots are the x-values
        of the class of exact order s (s >= 2)."""
        with self._lock:
            if s not in self._class_poly:
                if s == 2:
                    val = self.curve.rhs.monic()
                else:
                    val = self.t(s).u.monic()
                self._class_poly.setdefault(s, val)
            return self._class_poly[s]

    def t_star(self, divisor: TorsionDivisor) -> FuncElt:
        """Product over s >= 2 of t_s^{n_s}; the s = 1 coefficient is
        deliberately ignored (the e-part is tracked by degrees)."""
        out = self.curve.one()
        for s, n in divisor.coeffs.items():
            if s >= 2 and n:
                out = out * self.t(s) ** n
        return out

    # -- chart series and differentials ----------------------------------

    def chart(self, prec: int) -> tuple[LaurentSeries, LaurentSeries]:
        with self._lock:
            if self._chart is None or self._chart[0] < prec:
                x, y = _chart_series(self.curve, prec)
                self._chart = (prec, x, y)
            stored_prec, x, y = self._chart
            return x.truncate(prec), y.truncate(prec)

    def expand(self, elt: FuncElt, prec: int) -> LaurentSeries:
        return expand_at_e(elt, prec)

    def diff_factor(self) -> Q:
        """Scalar kappa with Dt = kappa * dx / y, fixed by Dt/dt_e -> 1 at e."""
        with self._lock:
            if self._diff_factor is None:
                prec = 8
                x, y = self.chart(prec)
                ratio = x.derivative() * series_reciprocal(y)
                te = expand_at_e(self.coordinate.base, prec)
                ratio = ratio * series_reciprocal(te.derivative())
                if ratio.exact_valuation() != 0:
                    raise ValidationFailed("invariant differential normalisation failed")
                self._diff_factor = QONE / ratio.coeff(0)
            return self._diff_factor

    def differential(self, f) -> "MeromorphicDifferential":
        return MeromorphicDifferential(self, f)

    # -- structural pole analysis ----------------------------------------

    def classify_x_poly(self, poly: Poly, bound: int | None = None):
        """Split a polynomial in x into per-class parts against the class
        polynomials up to `bound`.  Returns (parts: {s: multiplicity-poly},
        leftover)."""
        bound = bound or self.coordinate.validated_to
        poly = poly.monic() if not poly.is_zero() else poly
        parts: dict[int, Poly] = {}
        for s in range(2, bound + 1):
            if poly.degree < 1:
                break
            if exact_order_count(s) == 0:
                continue
            cp = self.class_poly(s)
            acc = Poly.const(1)
            g = poly_gcd(poly, cp)
            while g.degree >= 1:
                acc = acc * g
                poly = poly // g
                g = poly_gcd(poly, cp)
            if acc.degree >= 1:
                parts[s] = acc
        return parts, poly

    def pole_support(self, elt: FuncElt, bound: int | None = None) -> dict[int, int]:
        """Upper bounds for the pole order of `elt` on each torsion class.

        Raises UnsupportedPoles when the denominator has a root that is
        not recognised as torsion of order <= bound.
        """
        bounds: dict[int, int] = {}
        if elt.is_zero():
            return bounds
        if elt.d.degree >= 1:
            parts, leftover = self.classify_x_poly(elt.d, bound)
            if leftover.degree >= 1:
                raise UnsupportedPoles(
                    f"denominator factor {leftover.text()} is not supported on "
                    f"torsion classes up to {bound or self.coordinate.validated_to}"
                )
            for s, part in parts.items():
                mult = part.degree  # total x-multiplicity on the class
                bounds[s] = 2 * mult  # ord_P(x - x0) <= 2, so this is safe
        pole_e = elt.pole_order_at_e()
        if pole_e:
            bounds[1] = pole_e
        return bounds

    # -- divisor-window primitives ----------------------------------------

    def membership(self, elt: FuncElt, divisor: TorsionDivisor) -> bool:
        """Exact test: does elt lie in H^0(O(divisor))?

        Shifting by t*(divisor) moves every allowed pole to e, where the
        answer is a degree check on the canonical form.
        """
        if elt.is_zero():
            return True
        self.pole_support(elt)  # raises UnsupportedPoles for off-class poles
        for s in divisor.support:
            if s >= 2:
                self.t(s)  # make sure shifts exist before multiplying
        shifted = elt * self.t_star(divisor)
        if not shifted.is_pure():
            return False
        return shifted.pole_order_at_e() <= divisor.degree

    def ord_along(self, elt: FuncElt, s: int) -> int:
        """Minimum valuation of elt across the points of exact order s."""
        if elt.is_zero():
            raise ZeroDivisionError("the zero element has no valuation")
        if s == 1:
            return elt.ord_e()
        support = self.pole_support(elt)
        enclosing = {r: n for r, n in support.items() if r != s}
        # upper bound for zeros on the class: total zero degree / class size
        num_deg = max(2 * elt.u.degree, 3 + 2 * elt.v.degree)
        zero_cap = (num_deg + 2 * elt.d.degree) // exact_order_count(s) + 1
        m = -(support.get(s, 0) + 1)
        if not self.membership(elt, TorsionDivisor(enclosing) + single_class(s, -m)):
            raise UnsupportedPoles(f"cannot enclose poles of {elt!r}")
        while m < zero_cap and self.membership(
            elt, TorsionDivisor(enclosing) + single_class(s, -(m + 1))
        ):
            m += 1
        return m

    def rr_basis(self, divisor: TorsionDivisor) -> list[FuncElt]:
        """Basis of H^0(O(divisor)) as monomials over t*(divisor).

        Ordering is by ascending pole order at e: 1, x, y, x^2, xy, ...
        Degree zero gives the single element 1/t* (every full-class sum
        of torsion points adds to e, so such divisors are principal).
        """
        deg = divisor.degree
        if deg < 0:
            return []
        shift = self.t_star(divisor)
        inv = shift.inverse()
        if deg == 0:
            return [inv]
        return [monomial(self.curve, k) * inv for k in range(deg)]

    def coordinate_profile(self, s: int) -> tuple[int, int]:
        """(pole bound of t_e, pole bound of 1/t_e) on the class of order s."""
        if s == 1:
            return (0, 1)
        with self._lock:
            if s not in self._coordinate_profile:
                base = self.coordinate.base
                lo = self.ord_along(base, s)
                hi = -self.ord_along(base.inverse(), s)
                # lo = min valuation, hi = max valuation on the class
                self._coordinate_profile[s] = (max(0, -lo), max(0, hi))
            return self._coordinate_profile[s]

    def validate_coordinate(self) -> dict:
        """Check the coordinate's divisor is torsion-supported up to the
        declared bound; returns a report of the classes touched."""
        base = self.coordinate.base
        bound = self.coordinate.validated_to
        touched: set[int] = set()
        for poly in (base.norm_poly(), base.d):
            if poly.degree >= 1:
                parts, leftover = self.classify_x_poly(poly, bound)
                if leftover.degree >= 1:
                    raise ValidationFailed(
                        "coordinate has zeros or poles off the torsion classes "
                        f"validated up to order {bound}: factor {leftover.text()}"
                    )
                touched.update(parts)
        return {
            "validated_to": bound,
            "classes": sorted(touched),
            "profile": {s: self.coordinate_profile(s) for s in sorted(touched)},
        }

    # -- persistence -------------------------------------------------------

    def psi_cache_payload(self) -> dict:
        with self._lock:
            return {
                str(n): [f.u.text(), f.v.text(), f.d.text()]
                for n, f in sorted(self._psi.items())
                if n >= 1
            }

    def warm(self, upto: int) -> None:
        for n in range(1, upto + 1):
            self.psi(n)

    def load_psi_payload(self, payload: dict) -> None:
        entries = {}
        for key, (u, v, d) in payload.items():
            n = int(key)
            elt = FuncElt(self.curve, parse_poly(u), parse_poly(v), parse_poly(d))
            fresh = division_psi_raw(self.curve, n, dict(entries))
            if fresh != elt:
                raise ValidationFailed(f"cached psi_{n} disagrees with recomputation")
            entries[n] = elt
        with self._lock:
            for n, elt in entries.items():
                self._psi.setdefault(n, elt)


def monomial(curve: WeierstrassCurve, k: int) -> FuncElt:
    """k-th element of the pole-order ladder at e: 1, x, y, x^2, xy, ...

    Its pole order at e is 0 for k = 0 and k + 1 for k >= 1 (order 1 is
    impossible on the curve, which is exactly the genus-one gap).
    """
    if k < 0:
        raise ValueError("index must be nonnegative")
    if k == 0:
        return curve.one()
    pole = k + 1
    if pole % 2 == 0:
        return curve.elt(Poly.x_power(pole // 2))
    return FuncElt(curve, Poly(), Poly.x_power((pole - 3) // 2), Poly.const(1))


def monomial_pole(k: int) -> int:
    return 0 if k == 0 else k + 1


def pole_index(pole: int) -> int:
    """Inverse of monomial_pole (pole 1 never occurs)."""
    if pole == 0:
        return 0
    if pole == 1:
        raise ValueError("no monomial has a simple pole at e")
    return pole - 1


def h_dims(divisor: TorsionDivisor) -> tuple[int, int]:
    """(h^0, h^1) of O(divisor) for a torsion-class divisor.

    Degree zero is (1, 1): the point sum of every full-class combination
    is the identity, so the divisor is principal.
    """
    deg = divisor.degree
    if deg > 0:
        return (deg, 0)
    if deg < 0:
        return (0, -deg)
    return (1, 1)


# ---------------------------------------------------------------------------
# save/load for the division polynomial cache


def save_psi_cache(cache: CycCache, path) -> None:
    payload = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (FileNotFoundError, json.JSONDecodeError):
        payload = {}
    payload[cache.curve.key()] = cache.psi_cache_payload()
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    import os

    os.replace(tmp, path)


def load_psi_cache(cache: CycCache, path) -> int:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        return 0
    entry = payload.get(cache.curve.key())
    if not entry:
        return 0
    cache.load_psi_payload(entry)
    return len(entry)


# ---------------------------------------------------------------------------
# residues


def _taylor_mod(p: Poly, g: Poly, count: int) -> list[Poly]:
    """First `count` Taylor coefficients p^(k)(alpha)/k! of p around a
    root alpha of g, each represented as a polynomial reduced mod g."""
    out = []
    cur = p
    fact = QONE
    for k in range(count):
        if k:
            cur = cur.derivative()
            fact = fact * k
        out.append(cur.scale(QONE / fact) % g)
    return out


def trace_residues(num: Poly, den: Poly, marker: Poly) -> Q:
    """Sum of residues of (num/den) dx over the roots of `marker`.

    marker must be monic and squarefree.  No roots are ever extracted:
    for each squarefree factor of den meeting the marker, the local
    Laurent tail is inverted in Q[x]/(g) and the residue sum over the
    shared roots comes out as a trace, hence an exact rational.
    """
    if marker.degree < 1 or marker.leading() != 1:
        raise ValueError("marker must be monic of positive degree")
    if num.is_zero():
        return QZERO
    common = poly_gcd(num, den)
    if common.degree >= 1:
        num = num // common
        den = den // common
    total = QZERO
    for factor, mult in squarefree_decomposition(den):
        g = poly_gcd(factor, marker)
        if g.degree < 1:
            continue
        dens = _taylor_mod(den, g, 2 * mult)
        if any(not c.is_zero() for c in dens[:mult]):
            raise ArithmeticError("pole multiplicity disagrees with its factor")
        # invert the unit series h = den/(x - alpha)^mult over Q[x]/(g)
        inv = [poly_inverse_mod(dens[mult], g)]
        for k in range(1, mult):
            acc = Poly()
            for i in range(1, k + 1):
                acc = (acc + dens[mult + i] * inv[k - i]) % g
            inv.append((-(inv[0] * acc)) % g)
        nums = _taylor_mod(num, g, mult)
        combo = Poly()
        for j in range(mult):
            combo = (combo + nums[j] * inv[mult - 1 - j]) % g
        total += trace_in_quotient(combo, g)
    return total


class MeromorphicDifferential:
    """f * Dt for the invariant differential Dt, normalised so that
    Dt agrees with dt_e at the identity (Dt = kappa dx/y for the scalar
    kappa = cache.diff_factor())."""

    __slots__ = ("cache", "f")

    def __init__(self, cache: CycCache, f):
        if not isinstance(f, FuncElt):
            f = cache.curve.one() * f
        object.__setattr__(self, "cache", cache)
        object.__setattr__(self, "f", f)

    def __setattr__(self, name, value):
        raise AttributeError("MeromorphicDifferential is immutable")

    def __mul__(self, other):
        return MeromorphicDifferential(self.cache, self.f * other)

    def __rmul__(self, other):
        return self * other

    def __neg__(self):
        return MeromorphicDifferential(self.cache, -self.f)

    def __add__(self, other):
        if not isinstance(other, MeromorphicDifferential):
            return NotImplemented
        return MeromorphicDifferential(self.cache, self.f + other.f)

    def __sub__(self, other):
        return self + (-other)

    def text(self) -> str:
        return f"{self.f.text()} * Dt"

    def __repr__(self):
        return f"MeromorphicDifferential({self.text()})"


def residue_at_e(omega: MeromorphicDifferential, prec: int | None = None) -> Q:
    """Residue of omega at the identity."""
    f = omega.f
    if f.is_zero() or f.ord_e() >= 0:
        return QZERO
    work = prec if prec is not None else f.pole_order_at_e() + 2
    cache = omega.cache
    fs = expand_at_e(f, work)
    x, y = cache.chart(work + 4)
    # Dt = kappa dx/y, so res_e(f Dt) is the t^-1 coefficient of
    # f(t) * kappa * x'(t)/y(t)
    unit = x.derivative() * series_reciprocal(y)
    series = fs * unit * cache.diff_factor()
    return series.coeff(-1)


def residue_along(omega: MeromorphicDifferential, s: int) -> Q:
    """Sum of residues of omega over the points of exact order s.

    Writing f = (u + v y)/d, the summand f * kappa dx / y splits into
    u/(dy) (odd under y -> -y) plus v/d (even).  A class is stable under
    the flip, so odd residues cancel in pairs, and at 2-torsion, where
    the flip fixes the point, they vanish outright.  What remains is a
    differential pulled back from the x-line, where each branch of the
    double cover contributes one copy: twice a trace over the class
    polynomial.
    """
    if s == 1:
        return residue_at_e(omega)
    f = omega.f
    if f.is_zero() or f.v.is_zero():
        return QZERO
    marker = omega.cache.class_poly(s)
    return 2 * omega.cache.diff_factor() * trace_residues(f.v, f.d, marker)


# ---------------------------------------------------------------------------
# quotient windows in the monomial frame


def frame_coords(elt: FuncElt, dim: int) -> list[Q]:
    """Coordinates of a pure element against the monomial ladder
    1, x, y, x^2, xy, ... truncated to the first `dim` entries.

    The ladder spans exactly the elements with poles only at e, so this
    fails loudly when the element is not pure or overflows the window.
    """
    if not elt.is_pure():
        raise ValueError("frame coordinates need a pure element")
    out = [QZERO] * dim
    for j in range(elt.u.degree + 1):
        c = elt.u.coeff(j)
        if c == 0:
            continue
        k = 0 if j == 0 else pole_index(2 * j)
        if k >= dim:
            raise ValueError(f"x^{j} overflows a frame of dimension {dim}")
        out[k] = c
    for j in range(elt.v.degree + 1):
        c = elt.v.coeff(j)
        if c == 0:
            continue
        k = pole_index(2 * j + 3)
        if k >= dim:
            raise ValueError(f"x^{j} y overflows a frame of dimension {dim}")
        out[k] = c
    return out


class QuotientWindow:
    """The quotient H^0(O(G)) / H^0(O(G')) in explicit coordinates, for

        G  = (base + depth) A<s> + others,
        G' =  base          A<s> + others.

    Its dimension is depth * |A<s>| whatever the enclosure `others`
    (an effective divisor avoiding the class s) happens to be.  All of
    H^0(O(G)) is the span of monomials over t*(G), so classes reduce to
    vectors: write the shifted element in the monomial frame, sweep out
    the subspace (whose basis is triangular by pole order), and read the
    surviving complement coordinates.

    When base = 0 and `others` has degree zero an auxiliary class is
    added, keeping the residual divisor G' of positive degree; this pads
    the frame without changing the window dimension.
    """

    def __init__(self, cache: CycCache, s: int, depth: int,
                 others: TorsionDivisor | None = None, base: int = 0):
        if depth < 1:
            raise ValueError("window depth must be at least 1")
        if base < 0:
            raise ValueError("window base must be nonnegative")
        others = others if others is not None else TorsionDivisor()
        if others.coefficient(s) != 0:
            raise ValueError("the enclosure must avoid the quotient class")
        if not others.is_effective():
            raise ValueError("the enclosure must be effective")
        m = exact_order_count(s)
        if base * m + others.degree < 1:
            others = others + single_class(1 if s >= 2 else 2, 1)
        self.cache = cache
        self.s = s
        self.depth = depth
        self.base = base
        self.others = others
        self.block_size = depth * m
        self.residual_dim = base * m + others.degree
        self.frame_dim = self.residual_dim + self.block_size
        self.divisor = others + single_class(s, base + depth)
        self.shift = cache.t_star(self.divisor)
        self._shift_inv = self.shift.inverse()
        # frame vectors spanning H^0(O(G')); each has a distinct top slot
        # (strictly increasing pole orders), normalised to a 1 there
        sub_shift = cache.t(s) ** depth if s >= 2 else cache.curve.one()
        reducers: dict[int, list[Q]] = {}
        for j in range(self.residual_dim):
            vec = frame_coords(monomial(cache.curve, j) * sub_shift, self.frame_dim)
            top = max(k for k, c in enumerate(vec) if c != 0)
            assert top not in reducers, "sub-basis tops collide"
            lead = vec[top]
            reducers[top] = [c / lead for c in vec]
        self._reducers = reducers
        self._sweep_order = sorted(reducers, reverse=True)
        self.complement = sorted(set(range(self.frame_dim)) - set(reducers))
        assert len(self.complement) == self.block_size

    def coords(self, f: FuncElt) -> list[Q]:
        """Coordinate vector of the class of f, length block_size."""
        shifted = f * self.shift
        if not shifted.is_pure():
            raise UnsupportedPoles("element carries poles beyond the window divisor")
        try:
            vec = frame_coords(shifted, self.frame_dim)
        except ValueError as exc:
            raise UnsupportedPoles(str(exc)) from None
        return self.coords_of_frame(vec)

    def coords_of_frame(self, vec: list[Q]) -> list[Q]:
        """Sweep half of `coords`: takes the frame vector of an element
        already multiplied by the window shift.  Callers that assemble
        many columns against one window can form those products once and
        skip the division hidden in `coords`.
        """
        if len(vec) != self.frame_dim:
            raise ValueError("frame vector does not match the window frame")
        vec = list(vec)
        for top in self._sweep_order:
            c = vec[top]
            if c != 0:
                red = self._reducers[top]
                for k in range(top + 1):
                    if red[k] != 0:
                        vec[k] -= c * red[k]
        return [vec[k] for k in self.complement]

    def rep(self, i: int) -> FuncElt:
        """Representative of the i-th basis class; coords(rep(i)) = e_i."""
        return monomial(self.cache.curve, self.complement[i]) * self._shift_inv

    def vanishes(self, f: FuncElt) -> bool:
        return all(c == 0 for c in self.coords(f))


def principal_part(cache: CycCache, f: FuncElt, s: int, depth: int) -> list[Q]:
    """Class of f in H^0(O(G)) / H^0(O(G - depth A<s>)) as a vector of
    length depth * |A<s>|, where G enclosing the poles of f away from
    the class s is chosen from its pole support.

    Poles on the class deeper than `depth` are split off slice by slice
    and discarded, so the result is the class of the depth-truncation.
    """
    if depth < 1:
        raise DepthExceeded("principal parts need depth at least 1")
    if not isinstance(f, FuncElt):
        f = cache.curve.one() * f
    support = cache.pole_support(f)
    others = TorsionDivisor({r: n for r, n in support.items() if r != s and n > 0})
    if f.is_zero():
        return [QZERO] * (depth * exact_order_count(s))
    excess = max(0, -cache.ord_along(f, s))
    g = f
    for level in range(excess, depth, -1):
        top_slice = QuotientWindow(cache, s, 1, others, base=level - 1)
        for i, c in enumerate(top_slice.coords(g)):
            if c != 0:
                g = g - top_slice.rep(i) * c
    return QuotientWindow(cache, s, depth, others).coords(g)
