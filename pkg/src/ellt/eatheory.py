"""The elliptic model: curve-backed windows and the invariants over them.

This plugs a Weierstrass curve into the generic window machinery from
`tmodel`.  The vertex of an object is a Riemann-Roch space of the cap
divisor, the torsion window at an isogeny class is a pole-depth quotient
from `curvefield`, and the structure map sends a global function to its
principal parts after twisting by the cyclotomic power the weight
prescribes at each class.

On top of the raw windows live the things the command line serves:
sphere homology and cohomology, the coefficient ring of the base object,
the residue duality pairing, completed stalks at the identity, torsion
supported cohomology, and localisation vertices.
"""

from __future__ import annotations

from .curvefield import (
    Coordinate,
    CycCache,
    FuncElt,
    QuotientWindow,
    TorsionDivisor,
    WeierstrassCurve,
    divisors_of,
    exact_order_count,
    frame_coords,
    monomial,
    principal_part,
    residue_along,
)
from .errors import CapTooSmall, UnsupportedPoles, ValidationFailed
from .exactcore import Matrix, Q, QZERO, matrix_rank, qtext
from .tmodel import (
    ASObject,
    AlmostConstant,
    EulerClassSymbol,
    ExtWindow,
    QWindow,
    Representation,
    SphereObject,
    TorsionWindow,
    dim_fn,
    stabilize,
)


def _as_weight(weights) -> AlmostConstant:
    """Weight function of a representation given as {n: a_n} multiplicities,
    an explicit Representation, an AlmostConstant, or a constant integer."""
    if isinstance(weights, AlmostConstant):
        return weights
    if isinstance(weights, (Representation, dict)):
        return dim_fn(weights)
    return AlmostConstant(int(weights))


def _weights_payload(weights) -> dict:
    """JSON-ready form of the representation the caller handed in."""
    if isinstance(weights, Representation):
        out = {str(n): a for n, a in sorted(weights.weights.items())}
        if weights.fixed_part:
            out["0"] = weights.fixed_part
        return out
    if isinstance(weights, dict):
        return {str(n): int(a) for n, a in sorted(weights.items())}
    if isinstance(weights, AlmostConstant):
        return weights.payload()
    return {"0": int(weights)}


class GradedFn:
    """A curve function carrying a differential weight: f * Dt^n.

    The weight is bookkeeping for the grading; arithmetic acts on the
    function and treats Dt as a formal invertible symbol, so products
    add weights and sums must agree on them.
    """

    __slots__ = ("fn", "weight")

    def __init__(self, fn: FuncElt, weight: int = 0):
        if not isinstance(fn, FuncElt):
            raise TypeError("graded functions wrap curve elements")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "weight", int(weight))

    def __setattr__(self, name, value):
        raise AttributeError("GradedFn is immutable")

    def is_zero(self) -> bool:
        return self.fn.is_zero()

    def __add__(self, other):
        if not isinstance(other, GradedFn):
            return NotImplemented
        if other.weight != self.weight and not (self.is_zero() or other.is_zero()):
            raise ValueError("cannot add graded functions of different weights")
        weight = other.weight if self.is_zero() else self.weight
        return GradedFn(self.fn + other.fn, weight)

    def __neg__(self):
        return GradedFn(-self.fn, self.weight)

    def __sub__(self, other):
        if not isinstance(other, GradedFn):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GradedFn):
            return GradedFn(self.fn * other.fn, self.weight + other.weight)
        return GradedFn(self.fn * other, self.weight)

    def __rmul__(self, other):
        return GradedFn(self.fn * other, self.weight)

    def __eq__(self, other):
        if not isinstance(other, GradedFn):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.weight == other.weight and self.fn == other.fn

    def __hash__(self):
        if self.is_zero():
            return hash("graded-zero")
        return hash((self.weight, self.fn))

    def text(self) -> str:
        if self.weight == 0:
            return self.fn.text()
        dt = _dt_text(self.weight)
        if self.fn.is_constant() and self.fn.constant_value() == 1:
            return dt
        return f"{self.fn.text()} * {dt}"

    def __repr__(self):
        return f"GradedFn({self.text()})"


def _dt_text(n: int) -> str:
    return "Dt" if n == 1 else f"Dt^{n}"


class TorsionClass:
    """Principal-part class along one isogeny class, tagged with a weight."""

    __slots__ = ("s", "depth", "weight", "vector")

    def __init__(self, s: int, depth: int, weight: int, vector):
        object.__setattr__(self, "s", int(s))
        object.__setattr__(self, "depth", int(depth))
        object.__setattr__(self, "weight", int(weight))
        object.__setattr__(self, "vector", tuple(Q(c) for c in vector))

    def __setattr__(self, name, value):
        raise AttributeError("TorsionClass is immutable")

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.vector)

    def __eq__(self, other):
        if not isinstance(other, TorsionClass):
            return NotImplemented
        return (self.s, self.depth, self.weight, self.vector) == (
            other.s,
            other.depth,
            other.weight,
            other.vector,
        )

    def __hash__(self):
        return hash((self.s, self.depth, self.weight, self.vector))

    def text(self) -> str:
        body = ", ".join(qtext(c) for c in self.vector)
        return f"class {self.s} depth {self.depth} weight {self.weight}: [{body}]"

    def __repr__(self):
        return f"TorsionClass({self.text()})"


# ---------------------------------------------------------------------------
# the curve backend for the generic window machinery


class EllipticGroupData:
    """Curve-flavoured window backend.

    Vertices are Riemann-Roch spaces of the cap divisor, torsion windows
    are pole-depth quotients along one class, and the blocks of the
    structure map are frame sweeps.  One instance memoises quotient
    windows across assemblies; that reuse is what keeps sweeps over many
    weights affordable.
    """

    def __init__(self, cache: CycCache):
        self.cache = cache
        report = cache.validate_coordinate()
        self.touched = tuple(report["classes"])
        self.profile = dict(report["profile"])
        self._windows: dict = {}

    def class_size(self, s: int) -> int:
        return exact_order_count(s)

    def default_caps(self, exp: dict) -> dict:
        caps = {s: w for s, w in exp.items() if w > 0}
        if not caps:
            # a degree-zero vertex would lose the constants; one pole at
            # the identity keeps the window faithful
            caps = {1: 1}
        return caps

    def window(self, s: int, depth: int, others: TorsionDivisor,
               base: int = 0) -> QuotientWindow:
        key = (s, depth, tuple(sorted(others.coeffs.items())), base)
        win = self._windows.get(key)
        if win is None:
            win = QuotientWindow(self.cache, s, depth, others, base)
            self._windows[key] = win
        return win

    def torsion(self, s: int, depth: int) -> TorsionWindow:
        win = self.window(s, depth, TorsionDivisor())
        return TorsionWindow(
            s, depth, win.block_size, lambda i: win.rep(i).text(), win.rep
        )

    def setup(self, exp: dict, caps: dict) -> "_EllipticAssembly":
        return _EllipticAssembly(self, exp, caps)


class _EllipticAssembly:
    """Window context for one (weight exponent, caps) pair.

    The vertex is H^0(O(E)) for the cap divisor E, and the block at
    class s maps f to the class of t_s^{w(s)} f at depth cap(s) - w(s).
    Enclosures are chosen so the twist times the window shift cancels
    against t*(E) up to one explicit pure multiplier; every matrix entry
    is then a frame sweep of a monomial times that multiplier.
    """

    def __init__(self, backend: EllipticGroupData, exp: dict, caps: dict):
        self.backend = backend
        self.cache = backend.cache
        self.exp = dict(exp)
        self.caps = dict(caps)
        self.cap_divisor = TorsionDivisor(self.caps)
        deg = self.cap_divisor.degree
        self.degree = deg
        # degree zero still holds the constants (such divisors are principal)
        self.source_dim = deg if deg >= 1 else 1
        self.blocks = []
        for s in sorted(set(self.exp) | set(self.caps)):
            depth = self.caps.get(s, 0) - self.exp.get(s, 0)
            if depth >= 1:
                self.blocks.append((s, depth, depth * exact_order_count(s)))
        self.certified = deg >= 1 and all(
            self.caps.get(s, 0) >= w for s, w in self.exp.items()
        )
        self._shift_inv = None
        self._built: dict = {}

    def _vertex_shift_inv(self) -> FuncElt:
        if self._shift_inv is None:
            self._shift_inv = self.cache.t_star(self.cap_divisor).inverse()
        return self._shift_inv

    def source_element(self, k: int) -> FuncElt:
        if not 0 <= k < self.source_dim:
            raise IndexError("vertex index out of range")
        return monomial(self.cache.curve, k) * self._vertex_shift_inv()

    def source_label(self, k: int) -> str:
        return self.source_element(k).text()

    def _block(self, s: int) -> tuple[QuotientWindow, FuncElt]:
        built = self._built.get(s)
        if built is not None:
            return built
        depth = next(d for cls, d, _ in self.blocks if cls == s)
        w = self.exp.get(s, 0)
        if s == 1:
            others = {r: c for r, c in self.caps.items() if r >= 2 and c}
            if w:
                # powers of the coordinate move poles onto the classes of
                # its divisor; pad the enclosure to absorb them
                for r in self.backend.touched:
                    lo, hi = self.backend.profile[r]
                    pad = w * lo if w > 0 else -w * hi
                    if pad:
                        others[r] = others.get(r, 0) + pad
        else:
            others = {
                r: c for r, c in self.caps.items() if r >= 2 and r != s and c
            }
            e_part = self.caps.get(1, 0) + max(w, 0) * exact_order_count(s)
            if e_part:
                others[1] = e_part
        win = self.backend.window(s, depth, TorsionDivisor(others))
        mult = self._multiplier(s, w, win)
        self._built[s] = (win, mult)
        return win, mult

    def _multiplier(self, s: int, w: int, win: QuotientWindow) -> FuncElt:
        """Pure element h with (twist * f_k) * win.shift = m_k * h for the
        k-th vertex element f_k = m_k / t*(E).

        Collecting integer exponents first keeps the exact cancellation
        against t*(E) out of the function field arithmetic.
        """
        cache = self.cache
        out = cache.curve.one()
        if s == 1 and w:
            out = cache.coordinate.base ** w
        for r, c in win.divisor.coeffs.items():
            if r < 2 or not c:
                continue
            e = c - self.caps.get(r, 0)
            if r == s:
                e += w
            if e:
                out = out * cache.t(r) ** e
        assert out.is_pure(), "block multiplier must have poles only at e"
        return out

    def block_matrix(self, s: int) -> Matrix:
        win, mult = self._block(s)
        curve = self.cache.curve
        columns = []
        for k in range(self.source_dim):
            shifted = monomial(curve, k) * mult
            vec = frame_coords(shifted, win.frame_dim)
            columns.append(win.coords_of_frame(vec))
        return Matrix(tuple(zip(*columns)))

    def torsion_label(self, s: int, i: int) -> str:
        win, _ = self._block(s)
        return win.rep(i).text()

    def torsion_rep(self, s: int, i: int) -> FuncElt:
        """Representative of the i-th window class pulled back through the
        twist, so vertex functions pair against it directly."""
        win, _ = self._block(s)
        rep = win.rep(i)
        w = self.exp.get(s, 0)
        if not w:
            return rep
        if s == 1:
            return rep * self.cache.coordinate.base ** (-w)
        return rep * self.cache.t(s) ** (-w)


# ---------------------------------------------------------------------------
# the theory object


class EATheory:
    """The model of the equivariant theory attached to one curve.

    Holds the cyclotomic cache, the window backend, and the base object.
    Everything downstream is computed in finite windows whose caps carry
    an explicit stability certificate.
    """

    def __init__(self, cache: CycCache, check: bool = True):
        self.cache = cache
        self.backend = EllipticGroupData(cache)
        self.base_object = ASObject(self.backend, 0, name="EA")
        if check:
            self._construction_check()

    @property
    def curve(self) -> WeierstrassCurve:
        return self.cache.curve

    def sphere(self, weights) -> SphereObject:
        if isinstance(weights, Representation):
            return SphereObject(self.backend, weights)
        return SphereObject(self.backend, _as_weight(weights))

    def window(self, weights, caps=None) -> QWindow:
        return QWindow(self.backend, _as_weight(weights), caps)

    def q(self, symbol, fn, s: int, depth: int = 1) -> TorsionClass:
        """Structure map on one tensor: the Euler symbol prescribes the
        twist at the class, and the value is the principal part of the
        twisted function, tagged with the shifted weight."""
        if not isinstance(symbol, EulerClassSymbol):
            symbol = EulerClassSymbol.from_weights(symbol)
        weight = 0
        if isinstance(fn, GradedFn):
            weight, fn = fn.weight, fn.fn
        if not isinstance(fn, FuncElt):
            fn = self.curve.one() * fn
        w = symbol.exponent(s)
        g = fn
        if w:
            tw = self.cache.coordinate.base if s == 1 else self.cache.t(s)
            g = fn * tw ** w
        vec = principal_part(self.cache, g, s, depth)
        return TorsionClass(s, depth, weight - w, vec)

    def _construction_check(self) -> None:
        """Construction-time spot check: the base object has one function
        and one torsion class, and the structure map covers each torsion
        window once the vertex carries enough poles."""
        base = QWindow(self.backend, AlmostConstant(0))
        if base.hom_dim != 1 or base.ext_dim != 1:
            raise ValidationFailed(
                f"base window has dims ({base.hom_dim}, {base.ext_dim}), "
                "expected (1, 1)"
            )
        for s in (1, 2, 3, 4):
            for depth in (1, 2):
                caps = {1: depth, 2: 1} if s == 1 else {1: 2, s: depth}
                window = QWindow(self.backend, AlmostConstant(0), caps)
                if not window.block_surjective(s):
                    raise ValidationFailed(
                        f"structure map misses the class-{s} window "
                        f"at depth {depth}"
                    )


def build_ea(curve, coordinate: Coordinate | None = None,
             check: bool = True) -> EATheory:
    """Assemble the theory for a curve, validating the coordinate first.

    `curve` is a WeierstrassCurve or an (a, b) pair of rationals.
    """
    if not isinstance(curve, WeierstrassCurve):
        a, b = curve
        curve = WeierstrassCurve(a, b)
    cache = CycCache(curve, coordinate)
    return EATheory(cache, check=check)


def rep_to_divisor(weights) -> TorsionDivisor:
    """Divisor attached to a representation sphere: its weight function
    classwise, with the constant tail dropped (a trivial summand twists
    the grading but moves no poles)."""
    return TorsionDivisor(_as_weight(weights).exponent_map())


# ---------------------------------------------------------------------------
# sphere homology and cohomology


class SphereHomology:
    """Homology window of one representation sphere.

    Construction is certificate gated: caps that fail to dominate the
    weight raise CapTooSmall instead of producing unstable numbers.
    """

    __slots__ = ("theory", "weights", "weight", "window")

    def __init__(self, theory: EATheory, weights, caps=None):
        self.theory = theory
        self.weights = weights
        self.weight = _as_weight(weights)
        window = QWindow(theory.backend, self.weight, caps)
        if not window.certified:
            raise CapTooSmall(
                f"caps {window.caps} do not dominate the weight, so this "
                "window carries no stability certificate",
                caps=window.caps,
            )
        self.window = window

    @property
    def h0(self) -> int:
        return self.window.hom_dim

    @property
    def h1(self) -> int:
        return self.window.ext_dim

    def h0_basis(self) -> list[GradedFn]:
        tail = self.weight.tail
        return [
            GradedFn(self.window.kernel_element(k), tail)
            for k in range(self.window.hom_dim)
        ]

    def h1_reps(self) -> list[GradedFn]:
        ext = ExtWindow(self.window)
        exp = self.weight.exponent_map()
        tail = self.weight.tail
        out = []
        for k in range(ext.dim):
            s, _ = ext.classes[k]
            out.append(GradedFn(ext.rep(k), tail - exp.get(s, 0)))
        return out

    def report(self) -> dict:
        curve = self.theory.curve
        return {
            "curve": {"a": qtext(curve.a), "b": qtext(curve.b)},
            "coordinate": self.theory.cache.coordinate.describe(),
            "W": _weights_payload(self.weights),
            "h0": self.h0,
            "h1": self.h1,
            "h0_basis": [g.fn.text() for g in self.h0_basis()],
            "certified_caps": {
                str(s): self.window.caps[s] for s in sorted(self.window.caps)
            },
        }


def sphere_homology(theory: EATheory, weights, caps=None) -> SphereHomology:
    """Homology window of S^W for W given as {n: a_n} multiplicities."""
    return SphereHomology(theory, weights, caps)


def sphere_cohomology(theory: EATheory, weights, caps=None) -> SphereHomology:
    """Reduced cohomology of S^W, computed as the homology of S^{-W}."""
    return SphereHomology(theory, -_as_weight(weights), caps)


def stable_sphere_homology(theory: EATheory, weights, caps):
    """Dims of S^W under the three-point cap protocol.

    Evaluates at the given caps and two enlargements; raises CapTooSmall
    when any probe lacks a certificate or the dims keep moving.
    """
    weight = _as_weight(weights)

    def evaluate(c):
        window = QWindow(theory.backend, weight, c)
        return (window.hom_dim, window.ext_dim), window.certified

    return stabilize(evaluate, caps)


# ---------------------------------------------------------------------------
# the coefficient ring of the base object


def coefficient_ring(theory: EATheory, d_min: int = -4, d_max: int = 4,
                     caps=None) -> list[dict]:
    """Homotopy table of the base object over a degree range.

    Each degree carries one dimension: even degrees are powers of the
    invertible differential class on the unit, odd degrees its torsion
    partner tau.
    """
    window = theory.base_object.q_window(caps)
    if not window.certified:
        raise CapTooSmall("coefficient window is uncertified", caps=window.caps)
    if window.hom_dim != 1 or window.ext_dim != 1:
        raise ValidationFailed(
            f"base window has dims ({window.hom_dim}, {window.ext_dim}), "
            "expected (1, 1)"
        )
    unit = window.kernel_element(0)
    if not unit.is_constant():
        raise ValidationFailed("unit witness failed to be constant")
    rows = []
    for d in range(d_min, d_max + 1):
        if d % 2 == 0:
            n = d // 2
            witness = "1" if n == 0 else _dt_text(n)
        else:
            n = (d + 1) // 2
            witness = "tau" if n == 0 else f"tau*{_dt_text(n)}"
        rows.append({"degree": d, "dim": 1, "witness": witness})
    return rows


# ---------------------------------------------------------------------------
# multiplicativity of the window actions


def _matrix_add(a: Matrix, b: Matrix) -> Matrix:
    return Matrix(
        tuple(
            tuple(x + y for x, y in zip(ra, rb))
            for ra, rb in zip(a.entries, b.entries)
        )
    )


def product_check(theory: EATheory, depth: int = 2) -> dict:
    """Check that multiplication matrices of regular functions compose
    and add the way the functions themselves do, classwise.

    At the identity class the module is the completed stalk; at higher
    classes it is the depth window, whose coordinates are stable under
    enlarging the identity enclosure.  Raises ValidationFailed on the
    first mismatch.
    """
    cache = theory.cache
    curve = cache.curve
    backend = theory.backend
    pairs = 0

    def verify(tag, mat_of, samples):
        nonlocal pairs
        mats = [mat_of(f) for f in samples]
        for i, f1 in enumerate(samples):
            for j, f2 in enumerate(samples):
                if mat_of(f1 * f2).entries != (mats[i] * mats[j]).entries:
                    raise ValidationFailed(f"product action fails at {tag}")
                if mat_of(f1 + f2).entries != _matrix_add(mats[i], mats[j]).entries:
                    raise ValidationFailed(f"additive action fails at {tag}")
                pairs += 1

    # identity class: the completed stalk in the coordinate
    comp = completion(theory, depth + 2)
    base = cache.coordinate.base
    verify("class 1", comp.matrix_of,
           [curve.one(), base, curve.x() * base * base])

    # higher classes: one fixed window, enclosure grown only at e, where
    # the coordinates do not move
    for s in (2, 3):
        block = backend.window(s, depth, TorsionDivisor({1: 4}))
        reps = [block.rep(i) for i in range(block.block_size)]

        def coords_in(g, s=s):
            bound = max(4, g.pole_order_at_e())
            win = backend.window(s, depth, TorsionDivisor({1: bound}))
            return win.coords(g)

        def mat_of(f, reps=reps, coords_in=coords_in):
            return Matrix(tuple(zip(*[coords_in(f * g) for g in reps])))

        verify(f"class {s}", mat_of, [curve.one(), curve.x(), curve.y()])

    return {"classes": [1, 2, 3], "depth": depth, "pairs": pairs, "ok": True}


# ---------------------------------------------------------------------------
# residue duality


class SerrePairing:
    """Residue pairing between sections of a divisor and the torsion
    classes of its inverse."""

    __slots__ = ("divisor", "matrix", "dim", "rank", "sections", "reps", "classes")

    def __init__(self, divisor, matrix, sections, reps, classes):
        self.divisor = divisor
        self.matrix = matrix
        self.dim = divisor.degree
        self.rank = matrix_rank(matrix)
        self.sections = sections
        self.reps = reps
        self.classes = classes

    @property
    def nondegenerate(self) -> bool:
        return self.rank == self.dim


def serre_pairing(theory: EATheory, divisor, caps=None) -> SerrePairing:
    """Pair H^0(O(D)) against the torsion side of the window at -D.

    The matrix entry at (i, j) is the residue along the j-th class of
    f_i h_j Dt; duality says its rank is deg D.
    """
    if not isinstance(divisor, TorsionDivisor):
        divisor = TorsionDivisor(divisor)
    if not divisor.is_effective() or divisor.degree < 1:
        raise ValidationFailed(
            "duality needs an effective divisor of positive degree"
        )
    weight = AlmostConstant(0, dict(divisor.coeffs))
    hom_window = QWindow(theory.backend, weight, caps)
    if not hom_window.certified:
        raise CapTooSmall("duality window is uncertified", caps=hom_window.caps)
    ext = ExtWindow(QWindow(theory.backend, -weight))
    sections = [
        hom_window.kernel_element(k) for k in range(hom_window.hom_dim)
    ]
    reps = [ext.rep(j) for j in range(ext.dim)]
    classes = tuple(ext.classes[j][0] for j in range(ext.dim))
    if len(sections) != divisor.degree or len(reps) != divisor.degree:
        raise ValidationFailed(
            f"window dims ({len(sections)}, {len(reps)}) disagree with "
            f"the divisor degree {divisor.degree}"
        )
    cache = theory.cache
    entries = tuple(
        tuple(
            residue_along(cache.differential(f * h), s)
            for h, s in zip(reps, classes)
        )
        for f in sections
    )
    return SerrePairing(divisor, Matrix(entries), sections, reps, classes)


# ---------------------------------------------------------------------------
# the completed stalk at the identity


class CompletionModule:
    """Finite stage of the completion at the identity: functions modulo
    t_e^k in the basis 1, t_e, ..., t_e^{k-1}, with multiplication by
    t_e as the shift action."""

    __slots__ = ("cache", "k", "basis", "_expansions")

    def __init__(self, cache: CycCache, k: int):
        if k < 1:
            raise ValueError("completion stages start at k = 1")
        self.cache = cache
        self.k = int(k)
        base = cache.coordinate.base
        self.basis = [base ** j for j in range(self.k)]
        # triangular by valuation: base^j starts at t^j with a unit lead
        self._expansions = [cache.expand(b, self.k) for b in self.basis]

    @property
    def dim(self) -> int:
        return self.k

    def coords(self, f) -> list[Q]:
        """Coefficients of f against the basis; f must be regular at e."""
        if not isinstance(f, FuncElt):
            f = self.cache.curve.one() * f
        if f.is_zero():
            return [QZERO] * self.k
        if f.ord_e() < 0:
            raise UnsupportedPoles(
                "completion coordinates need an element regular at the identity"
            )
        series = self.cache.expand(f, self.k)
        vec = [series.coeff(j) for j in range(self.k)]
        out = [QZERO] * self.k
        for j in range(self.k):
            lead = self._expansions[j].coeff(j)
            c = vec[j] / lead
            out[j] = c
            if c != 0:
                for i in range(j, self.k):
                    vec[i] -= c * self._expansions[j].coeff(i)
        return out

    def matrix_of(self, f) -> Matrix:
        """Matrix of multiplication by f (regular at e) on the stage."""
        columns = [self.coords(f * b) for b in self.basis]
        return Matrix(tuple(zip(*columns)))

    def action_matrix(self) -> Matrix:
        """The shift: multiplication by the coordinate itself."""
        return self.matrix_of(self.cache.coordinate.base)

    def element(self, coords) -> FuncElt:
        total = self.cache.curve.zero()
        for c, b in zip(coords, self.basis):
            if c != 0:
                total = total + b * c
        return total


def completion(theory: EATheory, k: int) -> CompletionModule:
    """The k-th stage of the completed stalk at the identity."""
    return CompletionModule(theory.cache, k)


# ---------------------------------------------------------------------------
# torsion-supported cohomology


class LocalCohomology:
    """Cohomology window supported on the points whose order divides a
    member of the family pi, at the a-th infinitesimal stage.  All of it
    sits in odd degree."""

    __slots__ = ("pi", "a", "classes", "window", "dim")

    def __init__(self, pi, a, classes, window):
        self.pi = tuple(pi)
        self.a = int(a)
        self.classes = tuple(classes)
        self.window = window
        self.dim = window.ext_dim

    def reps(self) -> list[FuncElt]:
        ext = ExtWindow(self.window)
        return [ext.rep(k) for k in range(ext.dim)]

    def report(self) -> dict:
        return {
            "pi": list(self.pi),
            "a": self.a,
            "classes": list(self.classes),
            "dim": self.dim,
            "degree": "odd",
        }


def local_cohomology(theory: EATheory, pi, a: int = 1) -> LocalCohomology:
    """Sections supported on the order-pi points, thickened a times.

    The window at the weight -a on those classes computes it: no kernel,
    and one odd class per point per thickening level.
    """
    pi = sorted({int(n) for n in pi})
    if not pi or pi[0] < 1:
        raise ValidationFailed("pi must be a nonempty family of positive orders")
    if a < 1:
        raise ValidationFailed("the thickening level a must be at least 1")
    classes = sorted({s for n in pi for s in divisors_of(n)})
    weight = AlmostConstant(0, {s: -a for s in classes})
    window = QWindow(theory.backend, weight)
    expected = a * sum(exact_order_count(s) for s in classes)
    if window.hom_dim != 0 or window.ext_dim != expected:
        raise ValidationFailed(
            f"supported-cohomology window has dims ({window.hom_dim}, "
            f"{window.ext_dim}), expected (0, {expected})"
        )
    return LocalCohomology(pi, a, classes, window)


# ---------------------------------------------------------------------------
# localisation vertices


def localization_vertex(theory: EATheory, n: int, caps=None,
                        weight: int = 0) -> list[GradedFn]:
    """Vertex basis after inverting the Euler classes away from the
    order-n subgroup: sections with poles capped on the classes inside
    the subgroup, twisted into the given differential weight."""
    n = int(n)
    if n < 1:
        raise ValidationFailed("the subgroup order must be positive")
    caps = dict(caps or {})
    allowed = set(divisors_of(n))
    for s, c in caps.items():
        if s not in allowed:
            raise ValidationFailed(
                f"cap at class {s} lies outside the order-{n} subgroup"
            )
        if c < 0:
            raise ValidationFailed("caps are nonnegative")
    divisor = TorsionDivisor({s: c for s, c in caps.items() if c})
    return [GradedFn(f, weight) for f in theory.cache.rr_basis(divisor)]
