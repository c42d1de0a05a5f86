"""The sheaf side: sections over torsion-complement opens and the
comparison with model windows.

Opens here are complements of finitely many isogeny classes.  Sections
of a divisor sheaf over such an open form the colimit of Riemann-Roch
spaces as the poles on the removed classes grow; one `cap` fixes a
finite stage.  The model side reproduces these stages as kernels of
suspended windows, and `roundtrip` checks the two agree space for
space, while `glue_check` runs Mayer-Vietoris on one cover.
"""

from __future__ import annotations

from .curvefield import TorsionDivisor, frame_coords, h_dims
from .eatheory import EATheory, _as_weight, _weights_payload, rep_to_divisor
from .errors import CapTooSmall, ValidationFailed
from .exactcore import Matrix, matrix_rank
from .tmodel import ASObject, AlmostConstant, HomWindow, suspend


class OpenSet:
    """Complement of the union of finitely many isogeny classes.

    `pi` records the excluded classes by their exact orders.  Note the
    reversal: the union of two opens excludes the intersection of their
    class sets, the intersection excludes the union.
    """

    __slots__ = ("pi",)

    def __init__(self, pi=()):
        classes = sorted({int(s) for s in pi})
        if classes and classes[0] < 1:
            raise ValidationFailed("isogeny classes are labelled by orders >= 1")
        object.__setattr__(self, "pi", tuple(classes))

    def __setattr__(self, name, value):
        raise AttributeError("OpenSet is immutable")

    def is_everything(self) -> bool:
        return not self.pi

    def union(self, other: "OpenSet") -> "OpenSet":
        return OpenSet(set(self.pi) & set(other.pi))

    def intersect(self, other: "OpenSet") -> "OpenSet":
        return OpenSet(set(self.pi) | set(other.pi))

    def indicator(self, cap: int) -> dict:
        return {s: cap for s in self.pi}

    def __eq__(self, other):
        if not isinstance(other, OpenSet):
            return NotImplemented
        return self.pi == other.pi

    def __hash__(self):
        return hash(self.pi)

    def text(self) -> str:
        if not self.pi:
            return "the whole curve"
        return "complement of classes {}".format(list(self.pi))

    def __repr__(self):
        return f"OpenSet({list(self.pi)})"


class SectionWindow:
    """Sections of O(D) over an open, at one finite pole stage."""

    __slots__ = ("divisor", "open_set", "cap", "allowed", "basis")

    def __init__(self, divisor, open_set, cap, allowed, basis):
        self.divisor = divisor
        self.open_set = open_set
        self.cap = int(cap)
        self.allowed = allowed
        self.basis = list(basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def report(self) -> dict:
        return {
            "D": {str(s): n for s, n in sorted(self.divisor.coeffs.items()) if n},
            "pi": list(self.open_set.pi),
            "cap": self.cap,
            "dim": self.dim,
            "basis": [f.text() for f in self.basis],
        }


def _as_divisor(divisor) -> TorsionDivisor:
    if isinstance(divisor, TorsionDivisor):
        return divisor
    return TorsionDivisor(divisor)


def sections(cache, divisor, open_set: OpenSet, cap: int = 0) -> SectionWindow:
    """Sections of O(D) over the open set, with poles on the removed
    classes capped at `cap`: the Riemann-Roch space of the fattened
    divisor."""
    if cap < 0:
        raise ValidationFailed("the pole cap is nonnegative")
    divisor = _as_divisor(divisor)
    allowed = divisor + TorsionDivisor(open_set.indicator(cap))
    return SectionWindow(divisor, open_set, cap, allowed, cache.rr_basis(allowed))


def ma_eval(x: ASObject, open_set: OpenSet, cap: int = 0, caps=None) -> HomWindow:
    """Evaluate the sheaf of a model object on an open set.

    Sections over the complement of some classes are maps out of the
    zero sphere after letting poles grow there, so this is the kernel
    window of the object suspended by cap on every removed class.  The
    naive alternative of dropping matrix rows is wrong as soon as a
    weight is negative; suspension keeps kernel and certificate honest.
    """
    if cap < 0:
        raise ValidationFailed("the pole cap is nonnegative")
    delta = AlmostConstant(0, open_set.indicator(cap))
    shifted = suspend(x, delta)
    if caps is not None:
        caps = dict(caps)
        for s in open_set.pi:
            caps[s] = caps.get(s, 0) + cap
    window = shifted.q_window(caps)
    if not window.certified:
        raise CapTooSmall(
            f"evaluation over {open_set.text()} has no certificate at caps "
            f"{window.caps}",
            caps=window.caps,
        )
    return HomWindow(window)


def sa_build(theory: EATheory, divisor) -> ASObject:
    """Model object of a divisor sheaf: the base object suspended by the
    divisor, window for window; its kernels are the section spaces."""
    divisor = _as_divisor(divisor)
    coeffs = {s: n for s, n in divisor.coeffs.items() if n}
    name = "SA({})".format(
        " + ".join(f"{n}<{s}>" for s, n in sorted(coeffs.items())) or "0"
    )
    return ASObject(theory.backend, AlmostConstant(0, coeffs), name=name)


def _span_rows(cache, allowed, elements) -> list[tuple]:
    """Coordinate rows of the elements inside H^0(O(allowed))."""
    dim = max(allowed.degree, 1)
    shift = cache.t_star(allowed)
    return [tuple(frame_coords(g * shift, dim)) for g in elements]


def glue_check(cache, divisor, left: OpenSet, right: OpenSet,
               cap: int = 0) -> dict:
    """Mayer-Vietoris on one cover at one pole stage.

    Exactness in the middle: sections over the two pieces intersect in
    exactly the sections over their union.  The cokernel of the
    difference map is then forced to the h^1 defect of the four fattened
    divisors; both are checked, and failure raises.
    """
    divisor = _as_divisor(divisor)
    va = sections(cache, divisor, left, cap)
    vb = sections(cache, divisor, right, cap)
    v_union = sections(cache, divisor, left.union(right), cap)
    v_inter = sections(cache, divisor, left.intersect(right), cap)

    rows = _span_rows(cache, v_inter.allowed, va.basis + vb.basis)
    rank = matrix_rank(Matrix(tuple(rows))) if rows else 0
    if rank != va.dim + vb.dim - v_union.dim:
        raise ValidationFailed(
            "sections fail to glue: the pieces overlap in dimension "
            f"{va.dim + vb.dim - rank}, the union of opens gives {v_union.dim}"
        )
    coker = v_inter.dim - rank
    expected = (
        h_dims(v_inter.allowed)[1]
        + h_dims(v_union.allowed)[1]
        - h_dims(va.allowed)[1]
        - h_dims(vb.allowed)[1]
    )
    if coker != expected:
        raise ValidationFailed(
            f"difference map has cokernel {coker}, duality forces {expected}"
        )
    return {
        "D": {str(s): n for s, n in sorted(divisor.coeffs.items()) if n},
        "left": list(left.pi),
        "right": list(right.pi),
        "cap": cap,
        "dims": {
            "left": va.dim,
            "right": vb.dim,
            "union": v_union.dim,
            "intersection": v_inter.dim,
        },
        "rank": rank,
        "coker": coker,
        "ok": True,
    }


DEFAULT_OPENS = (OpenSet(), OpenSet({1}), OpenSet({2}), OpenSet({1, 2}))


def roundtrip(theory: EATheory, weights, opens=None, caps=(0, 1, 2, 3)) -> dict:
    """Sheaf to model and back.

    Builds the model object of D(W), confirms it is window-equal to the
    suspension of the base object by W, then evaluates it over every
    sampled open at every cap and compares with the honest section
    space: same dimension, same span.  Any mismatch raises.
    """
    divisor = rep_to_divisor(weights)
    obj = sa_build(theory, divisor)
    susp = suspend(theory.base_object, _as_weight(weights).minus_tail())
    if obj.weight != susp.weight:
        raise ValidationFailed(
            "the divisor object and the suspended base object disagree: "
            f"{obj.weight.text()} against {susp.weight.text()}"
        )
    if opens is None:
        opens = DEFAULT_OPENS
    cache = theory.cache
    rows_out = []
    for piece in opens:
        dims = []
        for cap in caps:
            sec = sections(cache, divisor, piece, cap)
            hom = ma_eval(obj, piece, cap)
            if hom.dim != sec.dim:
                raise ValidationFailed(
                    f"model gives dimension {hom.dim} over {piece.text()} at "
                    f"cap {cap}, sections give {sec.dim}"
                )
            if sec.dim:
                elements = [hom.element(k) for k in range(hom.dim)]
                span = _span_rows(cache, sec.allowed, elements + sec.basis)
                if matrix_rank(Matrix(tuple(span))) != sec.dim:
                    raise ValidationFailed(
                        f"model and sheaf sections over {piece.text()} at cap "
                        f"{cap} span different spaces"
                    )
            dims.append(sec.dim)
        rows_out.append({"pi": list(piece.pi), "dims": dims})
    return {
        "W": _weights_payload(weights),
        "D": {str(s): n for s, n in sorted(divisor.coeffs.items()) if n},
        "caps": list(caps),
        "opens": rows_out,
        "ok": True,
    }
