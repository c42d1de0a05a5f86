"""Exact rational arithmetic: scalars, dense polynomials, dense matrices,
and truncated Laurent series.

Every object here is immutable and every operation is exact over Q.
There are deliberately no floats, no FFT multiplication and no sparse
formats; sizes stay at desk scale and predictability wins.
"""

from __future__ import annotations

from .errors import PrecisionExhausted, ZeroSeries

try:  # gmpy2.mpq is a drop-in exact rational, much faster than Fraction
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover - fallback for minimal installs
    from fractions import Fraction as Q

QZERO = Q(0)
QONE = Q(1)


def rational(value) -> Q:
    """Coerce ints, strings like '-3/4', and rationals to the scalar type."""
    if isinstance(value, str):
        value = value.strip()
    return Q(value)


def qtext(value) -> str:
    """Canonical text for a rational: 'p/q', or just 'p' when integral."""
    value = Q(value)
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    return f"{num}/{den}"


# ---------------------------------------------------------------------------
# polynomials


class Poly:
    """Dense univariate polynomial over Q, coefficients ascending.

    The coefficient tuple never has a trailing zero; the zero polynomial
    is the empty tuple and reports degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        coeffs = [Q(c) for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @staticmethod
    def const(value) -> "Poly":
        return Poly((Q(value),))

    @staticmethod
    def x_power(n, scale=QONE) -> "Poly":
        return Poly((QZERO,) * n + (Q(scale),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> Q:
        if not self.coeffs:
            return QZERO
        return self.coeffs[-1]

    def coeff(self, n) -> Q:
        if 0 <= n < len(self.coeffs):
            return self.coeffs[n]
        return QZERO

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Poly(out)

    def __neg__(self):
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Poly):
            if not self.coeffs or not other.coeffs:
                return Poly()
            out = [QZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Poly(out)
        return self.scale(other)

    def scale(self, k) -> "Poly":
        k = Q(k)
        if k == 0:
            return Poly()
        return Poly(tuple(c * k for c in self.coeffs))

    def __divmod__(self, other):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        div = other.coeffs
        dd = len(div) - 1
        inv_lead = QONE / div[-1]
        quot = [QZERO] * max(len(rem) - dd, 0)
        for i in range(len(rem) - 1, dd - 1, -1):
            c = rem[i]
            if c == 0:
                continue
            q = c * inv_lead
            quot[i - dd] = q
            for j in range(dd + 1):
                rem[i - dd + j] -= q * div[j]
        return Poly(quot), Poly(rem)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def divides(self, other) -> bool:
        return (other % self).is_zero()

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self.scale(QONE / self.leading())

    def derivative(self) -> "Poly":
        return Poly(tuple(c * i for i, c in enumerate(self.coeffs) if i))

    def eval(self, point):
        acc = QZERO
        for c in reversed(self.coeffs):
            acc = acc * point + c
        return acc

    def pow(self, n) -> "Poly":
        if n < 0:
            raise ValueError("negative polynomial power")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def text(self) -> str:
        return "[" + ", ".join(qtext(c) for c in self.coeffs) + "]"

    def __repr__(self):
        return f"Poly({self.text()})"


def parse_poly(text: str) -> Poly:
    """Parse the bracketed ascending-coefficient format, e.g. '[-1, 0, 1]'."""
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"not a polynomial literal: {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return Poly()
    return Poly(tuple(rational(part) for part in inner.split(",")))


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm; gcd(0, 0) = 0."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def poly_xgcd(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Extended Euclid: returns (g, s, t) with s*a + t*b = g, g monic."""
    # invariant: s0*a + t0*b == r0 and s1*a + t1*b == r1
    r0, r1 = a, b
    s0, s1 = Poly.const(1), Poly()
    t0, t1 = Poly(), Poly.const(1)
    while not r1.is_zero():
        q, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    lead = r0.leading()
    inv = QONE / lead
    return r0.monic(), s0.scale(inv), t0.scale(inv)


def poly_inverse_mod(a: Poly, modulus: Poly) -> Poly:
    """Inverse of a modulo `modulus`; raises if they share a factor."""
    g, s, _ = poly_xgcd(a % modulus, modulus)
    if g.degree != 0:
        raise ZeroDivisionError("element not invertible modulo the given polynomial")
    return s % modulus


def power_sums(g: Poly, count: int) -> list:
    """Newton power sums p_0..p_{count-1} of the roots of a monic g.

    p_k is the sum of k-th powers of the roots (with multiplicity), an
    exact rational read off the coefficients without root-finding.
    """
    if g.is_zero() or g.leading() != 1:
        raise ValueError("power sums need a monic polynomial")
    deg = g.degree
    sums = [Q(deg)]
    for k in range(1, count):
        if k <= deg:
            acc = -k * g.coeff(deg - k)
            for i in range(1, k):
                acc -= g.coeff(deg - i) * sums[k - i]
        else:
            acc = QZERO
            for i in range(1, deg + 1):
                acc -= g.coeff(deg - i) * sums[k - i]
        sums.append(acc)
    return sums


def trace_in_quotient(h: Poly, g: Poly) -> Q:
    """Trace of multiplication by h on Q[x]/(g) for monic g, deg g >= 1."""
    if g.degree < 1:
        raise ValueError("quotient ring needs a modulus of positive degree")
    h = h % g
    if h.is_zero():
        return QZERO
    sums = power_sums(g, h.degree + 1)
    total = QZERO
    for k in range(h.degree + 1):
        total += h.coeff(k) * sums[k]
    return total


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun-style decomposition: p = lead * prod(f_i ** m_i) with the f_i
    monic, squarefree and pairwise coprime.  Returns [(f_i, m_i), ...]."""
    if p.degree < 1:
        return []
    p = p.monic()
    out = []
    m = 1
    while p.degree >= 1:
        g = poly_gcd(p, p.derivative())
        f = p // g  # product of factors of multiplicity >= m, each once
        # peel off factors whose multiplicity equals m
        h = poly_gcd(f, g)
        factor = f // h
        if factor.degree >= 1:
            out.append((factor.monic(), m))
        p = g
        m += 1
    return out


# ---------------------------------------------------------------------------
# matrices


class Matrix:
    """Dense matrix over Q, stored as a tuple of row tuples."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        entries = tuple(tuple(Q(e) for e in row) for row in entries)
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        if any(len(row) != cols for row in entries):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def row(self, i):
        return self.entries[i]

    def col(self, j):
        return tuple(row[j] for row in self.entries)

    def transpose(self) -> "Matrix":
        return Matrix(tuple(zip(*self.entries))) if self.rows else Matrix(())

    def mul_vector(self, vec):
        if len(vec) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(
            sum((r[j] * vec[j] for j in range(self.cols)), QZERO)
            for r in self.entries
        )

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        bt = other.transpose().entries
        return Matrix(
            tuple(
                tuple(
                    sum((a * b for a, b in zip(row, col)), QZERO) for col in bt
                )
                for row in self.entries
            )
        )

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"


def _rref(rows: list[list], cols: int) -> tuple[list[list], list[int]]:
    """In-place reduced row echelon form; returns (rows, pivot columns)."""
    pivots = []
    r = 0
    nrows = len(rows)
    for c in range(cols):
        pivot = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = QONE / rows[r][c]
        if inv != 1:
            rows[r] = [e * inv for e in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def rref(matrix: Matrix) -> tuple[Matrix, list[int]]:
    rows = [list(row) for row in matrix.entries]
    rows, pivots = _rref(rows, matrix.cols)
    return Matrix(rows) if rows else matrix, pivots


def matrix_rank(matrix: Matrix) -> int:
    """Rank by forward Gaussian elimination (no back-substitution)."""
    rows = [list(row) for row in matrix.entries]
    cols = matrix.cols
    rank = 0
    for c in range(cols):
        pivot = None
        for i in range(rank, len(rows)):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        prow = rows[rank]
        inv = QONE / prow[c]
        for i in range(rank + 1, len(rows)):
            if rows[i][c] != 0:
                factor = rows[i][c] * inv
                row = rows[i]
                for j in range(c, cols):
                    if prow[j] != 0:
                        row[j] -= factor * prow[j]
        rank += 1
        if rank == len(rows):
            break
    return rank


def kernel_and_image(matrix: Matrix) -> tuple[list[tuple], int]:
    """Exact kernel basis and rank of a matrix over Q.

    The kernel vectors come from the reduced row echelon form, one per
    free column, so the answer is deterministic.  rank + len(kernel)
    always equals the column count.
    """
    reduced, pivots = rref(matrix)
    rank = len(pivots)
    cols = matrix.cols
    free = [c for c in range(cols) if c not in pivots]
    kernel = []
    for fc in free:
        vec = [QZERO] * cols
        vec[fc] = QONE
        for r, pc in enumerate(pivots):
            vec[pc] = -reduced.entries[r][fc]
        kernel.append(tuple(vec))
    return kernel, rank


def solve_in_span(columns: list[tuple], target: tuple):
    """Express target as a Q-combination of the given column vectors.

    Returns the coefficient tuple, or None when target is outside the span.
    """
    if not columns:
        return () if all(t == 0 for t in target) else None
    n = len(target)
    if any(len(c) != n for c in columns):
        raise ValueError("dimension mismatch")
    aug = Matrix([tuple(col[i] for col in columns) + (target[i],) for i in range(n)])
    reduced, pivots = rref(aug)
    ncols = len(columns)
    if ncols in pivots:
        return None  # inconsistent: target needed its own pivot
    coeffs = [QZERO] * ncols
    for r, pc in enumerate(pivots):
        coeffs[pc] = reduced.entries[r][ncols]
    return tuple(coeffs)


# ---------------------------------------------------------------------------
# truncated Laurent series


class LaurentSeries:
    """Truncated Laurent series sum(c_i t**(valuation+i)) + O(t**end).

    `coeffs` has one entry per retained exponent, so precision is
    len(coeffs) and the first uncharted exponent is valuation + precision.
    A series whose retained coefficients are all zero is only *known* to
    vanish through its window; asking such a series for its valuation or
    leading coefficient raises instead of guessing.
    """

    __slots__ = ("valuation", "coeffs")

    def __init__(self, valuation, coeffs):
        coeffs = tuple(Q(c) for c in coeffs)
        if not coeffs:
            raise ValueError("series needs at least one retained coefficient")
        # normalise: leading retained coefficient nonzero (or all zero)
        shift = 0
        while shift < len(coeffs) and coeffs[shift] == 0:
            shift += 1
        if 0 < shift < len(coeffs):
            coeffs = coeffs[shift:]
            valuation += shift
        elif shift == len(coeffs):
            coeffs = (QZERO,) * len(coeffs)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentSeries is immutable")

    @property
    def precision(self) -> int:
        return len(self.coeffs)

    @property
    def end(self) -> int:
        """First exponent beyond the retained window."""
        return self.valuation + len(self.coeffs)

    def is_zero_to_precision(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def exact_valuation(self) -> int:
        if self.is_zero_to_precision():
            raise ZeroSeries("series is zero to its retained precision")
        return self.valuation

    def leading(self) -> Q:
        return self.coeffs[0] if not self.is_zero_to_precision() else QZERO

    def coeff(self, exponent) -> Q:
        """Coefficient of t**exponent; exponents beyond the window raise."""
        if exponent >= self.end:
            raise PrecisionExhausted(
                f"coefficient of t^{exponent} not retained (window ends at {self.end})"
            )
        idx = exponent - self.valuation
        if idx < 0:
            return QZERO
        return self.coeffs[idx]

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.valuation == other.valuation and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.valuation, self.coeffs))

    def __neg__(self):
        return LaurentSeries(self.valuation, tuple(-c for c in self.coeffs))

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            # exact scalar: window [min(0, val), end)
            if self.end <= 0:
                raise PrecisionExhausted("constant term lies beyond the retained window")
            other = LaurentSeries(0, (Q(other),) + (QZERO,) * (self.end - 1))
        end = min(self.end, other.end)
        val = min(self.valuation, other.valuation)
        if end <= val:
            raise PrecisionExhausted("no overlapping retained window in sum")
        out = [QZERO] * (end - val)
        for src in (self, other):
            for i, c in enumerate(src.coeffs):
                e = src.valuation + i
                if e < end:
                    out[e - val] += c
        return LaurentSeries(val, out)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            prec = min(self.precision, other.precision)
            if prec <= 0:
                raise PrecisionExhausted("no retained precision in product")
            out = [QZERO] * prec
            for i, a in enumerate(self.coeffs):
                if a == 0 or i >= prec:
                    continue
                top = prec - i
                for j, b in enumerate(other.coeffs[:top]):
                    if b != 0:
                        out[i + j] += a * b
            return LaurentSeries(self.valuation + other.valuation, out)
        k = Q(other)
        if k == 0:
            return LaurentSeries(self.valuation, (QZERO,) * self.precision)
        return LaurentSeries(self.valuation, tuple(c * k for c in self.coeffs))

    def scale_exponent(self, shift) -> "LaurentSeries":
        """Multiply by t**shift."""
        return LaurentSeries(self.valuation + shift, self.coeffs)

    def __pow__(self, exponent: int) -> "LaurentSeries":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("series powers take a nonnegative integer exponent")
        if exponent == 0:
            return series_one(self.precision)
        result = None
        base = self
        n = exponent
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def truncate(self, precision) -> "LaurentSeries":
        if precision > self.precision:
            raise PrecisionExhausted(
                f"cannot extend window from {self.precision} to {precision} terms"
            )
        return LaurentSeries(self.valuation, self.coeffs[:precision])

    def derivative(self) -> "LaurentSeries":
        """Term-by-term d/dt; O(t^end) becomes O(t^(end-1))."""
        out = [c * (self.valuation + i) for i, c in enumerate(self.coeffs)]
        return LaurentSeries(self.valuation - 1, out)

    def text(self) -> str:
        parts = [f"{qtext(c)}*t^{self.valuation + i}" for i, c in enumerate(self.coeffs) if c != 0]
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O(t^{self.end})"

    def __repr__(self):
        return f"LaurentSeries({self.text()})"


def series_one(precision: int) -> LaurentSeries:
    return LaurentSeries(0, (QONE,) + (QZERO,) * (precision - 1))


def series_reciprocal(series: LaurentSeries, precision=None) -> LaurentSeries:
    """Multiplicative inverse, computed by the standard recurrence.

    The input must have a nonzero leading coefficient within its window.
    """
    if series.is_zero_to_precision():
        raise ZeroSeries("cannot invert a series with no visible leading term")
    prec = series.precision if precision is None else min(precision, series.precision)
    c = series.coeffs
    lead_inv = QONE / c[0]
    out = [lead_inv] + [QZERO] * (prec - 1)
    for n in range(1, prec):
        acc = QZERO
        for k in range(1, n + 1):
            if k < len(c) and c[k] != 0:
                acc += c[k] * out[n - k]
        out[n] = -acc * lead_inv
    return LaurentSeries(-series.valuation, out)
