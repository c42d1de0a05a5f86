"""Weight bookkeeping and torsion windows for circle-equivariant models.

An object of the algebraic model is presented here by two pieces of data:
a backend (the "group data") that knows how to produce global sections
with bounded poles and finite windows onto each isogeny class, and a
weight function recording how far the object has been twisted away from
the unit object.  This module is generic: it assembles backend windows
into explicit matrices over Q, reads off kernel (Hom) and cokernel (Ext)
windows, and certifies when the finite window already shows the stable
answer.  Backends live in their own modules and are duck-typed; the
contract is spelled out on `assemble`.
"""

from __future__ import annotations

from .errors import CapTooSmall
from .exactcore import Matrix, QONE, QZERO, kernel_and_image, matrix_rank, rref


def _divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


class AlmostConstant:
    """Integer function on isogeny classes s >= 1, constant off a finite set.

    Stored as the eventual value `tail` plus the finitely many deviating
    entries; an entry equal to the tail is dropped on construction, so
    equality of functions is equality of the stored data.
    """

    __slots__ = ("tail", "dev")

    def __init__(self, tail=0, dev=None):
        tail = int(tail)
        clean = {}
        for s, v in (dev or {}).items():
            s, v = int(s), int(v)
            if s < 1:
                raise ValueError("classes are labelled by integers >= 1")
            if v != tail:
                clean[s] = v
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "dev", clean)

    def __setattr__(self, name, value):
        raise AttributeError("AlmostConstant is immutable")

    def __call__(self, s: int) -> int:
        if s < 1:
            raise ValueError("classes are labelled by integers >= 1")
        return self.dev.get(s, self.tail)

    def classes(self) -> list[int]:
        """The deviating classes, sorted."""
        return sorted(self.dev)

    def is_constant(self) -> bool:
        return not self.dev

    def exponent_map(self) -> dict[int, int]:
        """Deviations measured from the tail, as a plain dict.

        For the dimension function of a representation this recovers the
        multiplicity count n_s with the trivial summand stripped off.
        """
        return {s: v - self.tail for s, v in self.dev.items()}

    def minus_tail(self) -> "AlmostConstant":
        return AlmostConstant(0, self.exponent_map())

    def __add__(self, other):
        if isinstance(other, int):
            other = AlmostConstant(other)
        if not isinstance(other, AlmostConstant):
            return NotImplemented
        dev = {}
        for s in set(self.dev) | set(other.dev):
            dev[s] = self(s) + other(s)
        return AlmostConstant(self.tail + other.tail, dev)

    __radd__ = __add__

    def __neg__(self):
        return AlmostConstant(-self.tail, {s: -v for s, v in self.dev.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = AlmostConstant(other)
        if not isinstance(other, AlmostConstant):
            return NotImplemented
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, AlmostConstant):
            return NotImplemented
        return self.tail == other.tail and self.dev == other.dev

    def __hash__(self):
        return hash((self.tail, frozenset(self.dev.items())))

    def text(self) -> str:
        body = ", ".join(f"{s}: {self.dev[s]}" for s in sorted(self.dev))
        return f"(tail {self.tail}; {body})" if body else f"(tail {self.tail})"

    def __repr__(self):
        return f"AlmostConstant{self.text()}"

    def payload(self) -> dict:
        return {
            "tail": self.tail,
            "dev": {str(s): self.dev[s] for s in sorted(self.dev)},
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "AlmostConstant":
        return cls(payload.get("tail", 0), payload.get("dev", {}))


class Representation:
    """Finite-dimensional representation of the circle.

    Recorded as multiplicities of the weight spaces z^n for n >= 1 plus
    the dimension of the fixed summand.  Virtual combinations are not
    representations; pass those straight to `dim_fn` as a dict instead.
    """

    __slots__ = ("weights", "fixed_part")

    def __init__(self, weights=None, fixed_part=0):
        fixed_part = int(fixed_part)
        if fixed_part < 0:
            raise ValueError("fixed part is a dimension, so nonnegative")
        clean = {}
        for n, a in (weights or {}).items():
            n, a = int(n), int(a)
            if n < 1:
                raise ValueError("weights are labelled by integers >= 1")
            if a < 1:
                raise ValueError(
                    "representations have multiplicities >= 1; "
                    "use dim_fn for virtual combinations"
                )
            clean[n] = a
        object.__setattr__(self, "weights", clean)
        object.__setattr__(self, "fixed_part", fixed_part)

    def __setattr__(self, name, value):
        raise AttributeError("Representation is immutable")

    def dim(self) -> int:
        return sum(self.weights.values()) + self.fixed_part

    def dim_fn(self) -> AlmostConstant:
        return dim_fn(self.weights, self.fixed_part)

    def euler_exponent(self) -> AlmostConstant:
        """Multiplicity count n_s = sum of a_n over n divisible by s."""
        return dim_fn(self.weights, 0)

    def __eq__(self, other):
        if not isinstance(other, Representation):
            return NotImplemented
        return self.weights == other.weights and self.fixed_part == other.fixed_part

    def __hash__(self):
        return hash((frozenset(self.weights.items()), self.fixed_part))

    def text(self) -> str:
        parts = []
        for n in sorted(self.weights):
            a = self.weights[n]
            term = f"z^{n}" if n > 1 else "z"
            parts.append(term if a == 1 else f"{a}*{term}")
        if self.fixed_part:
            parts.append(f"Q^{self.fixed_part}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"Representation({self.text()})"

    def payload(self) -> dict:
        return {
            "weights": {str(n): self.weights[n] for n in sorted(self.weights)},
            "fixed_part": self.fixed_part,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Representation":
        return cls(payload.get("weights", {}), payload.get("fixed_part", 0))


def dim_fn(weights=None, fixed_part=0) -> AlmostConstant:
    """Fixed-point dimension function of a (possibly virtual) representation.

    w(s) counts the summands on which the order-s subgroup acts trivially:
    w(s) = sum of a_n over n divisible by s, plus the fixed part.  The
    tail is the fixed part, since large classes miss every finite weight.
    """
    if isinstance(weights, Representation):
        if fixed_part:
            raise ValueError("fixed part is already part of the representation")
        fixed_part = weights.fixed_part
        weights = weights.weights
    table = {}
    for n, a in (weights or {}).items():
        n, a = int(n), int(a)
        if n < 1:
            raise ValueError("weights are labelled by integers >= 1")
        if a:
            table[n] = table.get(n, 0) + a
    dev = {}
    for s in {d for n in table for d in _divisors(n)}:
        dev[s] = fixed_part + sum(a for n, a in table.items() if n % s == 0)
    return AlmostConstant(int(fixed_part), dev)


class EulerClassSymbol:
    """Formal Euler class c^w, indexed by a finitely supported exponent >= 0.

    These label the honest maps between sphere objects; multiplying
    symbols adds exponents.
    """

    __slots__ = ("exponent",)

    def __init__(self, exponent: AlmostConstant):
        if not isinstance(exponent, AlmostConstant):
            exponent = AlmostConstant(0, dict(exponent))
        if exponent.tail != 0:
            raise ValueError("Euler class exponents have tail zero")
        if any(v < 0 for v in exponent.dev.values()):
            raise ValueError("Euler class exponents are nonnegative")
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("EulerClassSymbol is immutable")

    @classmethod
    def from_weights(cls, weights) -> "EulerClassSymbol":
        rep = weights if isinstance(weights, Representation) else Representation(weights)
        return cls(rep.euler_exponent())

    def is_one(self) -> bool:
        return self.exponent.is_constant()

    def __mul__(self, other):
        if not isinstance(other, EulerClassSymbol):
            return NotImplemented
        return EulerClassSymbol(self.exponent + other.exponent)

    def __eq__(self, other):
        if not isinstance(other, EulerClassSymbol):
            return NotImplemented
        return self.exponent == other.exponent

    def __hash__(self):
        return hash(("euler", self.exponent))

    def text(self) -> str:
        if self.is_one():
            return "c^0"
        body = ", ".join(f"{s}: {v}" for s, v in sorted(self.exponent.dev.items()))
        return f"c({body})"

    def __repr__(self):
        return f"EulerClassSymbol({self.text()})"


class VertexWindow:
    """Finite basis window on the vertex (global sections) of an object."""

    __slots__ = ("dim", "_label", "_element")

    def __init__(self, dim, label, element):
        self.dim = int(dim)
        self._label = label
        self._element = element

    def label(self, k: int) -> str:
        return self._label(self._check(k))

    def element(self, k: int):
        return self._element(self._check(k))

    def _check(self, k: int) -> int:
        if not 0 <= k < self.dim:
            raise IndexError(f"vertex window has dimension {self.dim}")
        return k

    def labels(self) -> list[str]:
        return [self.label(k) for k in range(self.dim)]


class TorsionWindow:
    """Finite window onto the torsion module at one isogeny class."""

    __slots__ = ("s", "depth", "dim", "_label", "_element")

    def __init__(self, s, depth, dim, label, element):
        self.s = int(s)
        self.depth = int(depth)
        self.dim = int(dim)
        self._label = label
        self._element = element

    def label(self, i: int) -> str:
        return self._label(self._check(i))

    def element(self, i: int):
        return self._element(self._check(i))

    def _check(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(f"torsion window has dimension {self.dim}")
        return i


def _coerce_weight(weight) -> AlmostConstant:
    if isinstance(weight, AlmostConstant):
        return weight
    if isinstance(weight, Representation):
        return weight.dim_fn()
    if isinstance(weight, dict):
        return dim_fn(weight)
    if isinstance(weight, int):
        return AlmostConstant(weight)
    raise TypeError(f"cannot read {weight!r} as a weight function")


def _coerce_caps(caps) -> dict[int, int]:
    clean = {}
    for s, c in caps.items():
        s, c = int(s), int(c)
        if s < 1:
            raise ValueError("classes are labelled by integers >= 1")
        if c < 0:
            raise ValueError("caps are pole bounds, so nonnegative")
        if c:
            clean[s] = c
    return clean


class QWindow:
    """One finite window of the torsion-point map of a model object.

    The window is the matrix of the structure map from a vertex of global
    sections (poles capped classwise by `caps`) to the direct sum of one
    torsion window per class where the cap exceeds the weight.  Kernel
    vectors present the Hom window, uncovered rows present the Ext window.
    `certified` records whether the caps dominate the weight everywhere,
    which is exactly when these windows compute the stable answer.
    """

    def __init__(self, group, weight, caps=None):
        weight = _coerce_weight(weight)
        exp = weight.exponent_map()
        if caps is None:
            caps = group.default_caps(exp)
        caps = _coerce_caps(caps)
        self.group = group
        self.weight = weight
        self.caps = caps
        self.twist = weight.tail
        ctx = group.setup(exp, caps)
        self.ctx = ctx
        self.source_dim = ctx.source_dim
        self.blocks = []  # (s, depth, rows, row offset)
        offset = 0
        for s, depth, rows in ctx.blocks:
            self.blocks.append((s, depth, rows, offset))
            offset += rows
        self.total_rows = offset
        if self.total_rows and self.source_dim:
            entries = []
            for s, depth, rows, _ in self.blocks:
                block = ctx.block_matrix(s)
                if block.rows != rows or block.cols != self.source_dim:
                    raise ValueError(f"backend block at class {s} has wrong shape")
                entries.extend(block.entries)
            self.matrix = Matrix(entries)
            self.kernel, self.rank = kernel_and_image(self.matrix)
        else:
            # no conditions at all: everything in the vertex is a cycle
            self.matrix = None
            self.rank = 0
            self.kernel = [
                tuple(QONE if j == k else QZERO for j in range(self.source_dim))
                for k in range(self.source_dim)
            ]
        self.hom_dim = len(self.kernel)
        self.ext_dim = self.total_rows - self.rank
        self.certified = bool(ctx.certified)
        self._uncovered = None

    def vertex_window(self) -> VertexWindow:
        return VertexWindow(self.source_dim, self.ctx.source_label, self.ctx.source_element)

    def block_rows(self, s: int) -> tuple[int, int]:
        for cls, _, rows, offset in self.blocks:
            if cls == s:
                return offset, rows
        raise KeyError(f"no window block at class {s}")

    def block_surjective(self, s: int) -> bool:
        """Whether the window map covers the class-s torsion window alone."""
        offset, rows = self.block_rows(s)
        if rows == 0:
            return True
        sub = Matrix(self.matrix.entries[offset : offset + rows])
        return matrix_rank(sub) == rows

    def uncovered_rows(self) -> list[int]:
        """Rows outside the image; their unit vectors present the cokernel.

        Computed from the pivot rows of the column space: the reduced
        echelon form of the transpose marks which coordinates the image
        covers, and the complement splits off as a cokernel basis.
        """
        if self._uncovered is None:
            if self.matrix is None or self.rank == 0:
                covered = []
            else:
                _, covered = rref(self.matrix.transpose())
            covered = set(covered)
            self._uncovered = [r for r in range(self.total_rows) if r not in covered]
        return self._uncovered

    def row_class(self, row: int) -> tuple[int, int]:
        """Map a stacked row index to (class, index inside its window)."""
        for s, _, rows, offset in self.blocks:
            if offset <= row < offset + rows:
                return s, row - offset
        raise IndexError(f"row {row} outside the window")

    def kernel_element(self, k: int):
        """Materialise the k-th kernel vector as a backend element."""
        vec = self.kernel[k]
        total = None
        for j, c in enumerate(vec):
            if c == 0:
                continue
            term = self.ctx.source_element(j) * c
            total = term if total is None else total + term
        if total is None:
            raise ValueError("kernel vector is zero, which should not happen")
        return total

    def report(self) -> dict:
        return {
            "w": self.weight.payload(),
            "caps": {str(s): self.caps[s] for s in sorted(self.caps)},
            "hom_dim": self.hom_dim,
            "ext_dim": self.ext_dim,
            "certified": self.certified,
        }


def assemble(group, weight, caps=None) -> QWindow:
    """Build the finite window of the torsion-point map at the given weight.

    The backend `group` must provide:

      class_size(s)          -> int, the size of the class-s window slice
      default_caps(exp)      -> caps dict for a weight exponent dict
      torsion(s, depth)      -> TorsionWindow, independent of any caps
      setup(exp, caps)       -> assembly context with
          source_dim, source_label(k), source_element(k),
          blocks: ordered (s, depth, rows) triples,
          block_matrix(s)    -> Matrix of shape rows x source_dim,
          torsion_label(s, i), torsion_rep(s, i),
          certified: bool

    Elements only need Q-linear arithmetic; nothing here inspects them.
    """
    return QWindow(group, weight, caps)


class ASObject:
    """A model object presented by a backend and a weight function."""

    __slots__ = ("group", "weight", "name", "rigid_even")

    def __init__(self, group, weight, name=None, rigid_even=True):
        self.group = group
        self.weight = _coerce_weight(weight)
        self.name = name if name is not None else "X"
        # rigid even: the object carries no odd-degree internal structure,
        # so odd classes can only come from window cokernels.
        self.rigid_even = bool(rigid_even)

    def q_window(self, caps=None, weight=None) -> QWindow:
        w = self.weight if weight is None else _coerce_weight(weight)
        return QWindow(self.group, w, caps)

    def vertex_window(self, caps=None) -> VertexWindow:
        return self.q_window(caps).vertex_window()

    def torsion_window(self, s: int, depth: int) -> TorsionWindow:
        return self.group.torsion(s, depth)

    def __repr__(self):
        return f"ASObject({self.name}, w={self.weight.text()})"


class SphereObject(ASObject):
    """The sphere of a representation, as a model object.

    `weight` may be a Representation, a weight dict (virtual combinations
    welcome), an AlmostConstant, or a plain integer tail.
    """

    __slots__ = ("rep",)

    def __init__(self, group, weight=None, name=None):
        rep = weight if isinstance(weight, Representation) else None
        w = _coerce_weight(weight if weight is not None else 0)
        if name is None:
            name = f"S^({rep.text()})" if rep is not None else f"S^{w.text()}"
        super().__init__(group, w, name=name, rigid_even=True)
        self.rep = rep


def suspend(x: ASObject, delta) -> ASObject:
    """Suspend an object by a weight function (or representation).

    Window for window this just shifts which weight the q-map is read
    at, so the result is the same kind of object with weights added.
    """
    delta = _coerce_weight(delta)
    if isinstance(x, SphereObject):
        return SphereObject(x.group, x.weight + delta)
    return ASObject(x.group, x.weight + delta, name=f"susp({x.name})", rigid_even=x.rigid_even)


class HomWindow:
    """Window on maps from the zero sphere: the kernel of a q-window."""

    __slots__ = ("window", "dim")

    def __init__(self, window: QWindow):
        self.window = window
        self.dim = window.hom_dim

    def vector(self, k: int) -> tuple:
        return self.window.kernel[k]

    def element(self, k: int):
        return self.window.kernel_element(k)

    @property
    def certified(self) -> bool:
        return self.window.certified


class ExtWindow:
    """Window on the cokernel of a q-window, with torsion representatives."""

    __slots__ = ("window", "dim", "classes")

    def __init__(self, window: QWindow):
        self.window = window
        self.dim = window.ext_dim
        self.classes = [window.row_class(r) for r in window.uncovered_rows()]

    def rep(self, k: int):
        s, i = self.classes[k]
        return self.window.ctx.torsion_rep(s, i)

    def label(self, k: int) -> str:
        s, i = self.classes[k]
        return self.window.ctx.torsion_label(s, i)

    @property
    def certified(self) -> bool:
        return self.window.certified


def hom_from_sphere(x: ASObject, caps=None) -> HomWindow:
    """Maps out of the zero sphere into x, as a window.

    This is the degree-zero slice: the kernel of the q-window of x at its
    own weight.
    """
    return HomWindow(x.q_window(caps))


def ext_window(x: ASObject, caps=None) -> ExtWindow:
    """First derived window of maps from the zero sphere into x."""
    return ExtWindow(x.q_window(caps))


def sphere_hom(source, target) -> tuple[int, EulerClassSymbol | None]:
    """Degree-zero maps between spheres.

    There is a single copy of Q, spanned by the Euler symbol of the
    weight difference, exactly when the target weight is pointwise at
    most the source weight with the same tail; otherwise nothing.
    """
    ws = source.weight if isinstance(source, ASObject) else _coerce_weight(source)
    wt = target.weight if isinstance(target, ASObject) else _coerce_weight(target)
    if ws.tail != wt.tail:
        return 0, None
    diff = ws - wt
    if any(v < 0 for v in diff.dev.values()):
        return 0, None
    return 1, EulerClassSymbol(diff)


class StabilizedResult:
    """A window value together with the caps that certified it."""

    __slots__ = ("value", "caps", "certificate")

    def __init__(self, value, caps, certificate):
        self.value = value
        self.caps = dict(caps)
        self.certificate = dict(certificate)

    def __repr__(self):
        return f"StabilizedResult({self.value!r}, caps={self.caps})"


def stabilize(evaluation, caps) -> StabilizedResult:
    """Certify a capped evaluation by re-running it at enlarged caps.

    `evaluation` maps a caps dict to a (value, certified) pair.  The
    evaluation runs at caps, caps+1 and caps+2 (pointwise).  A run
    without a certificate, or any disagreement between the three values,
    raises CapTooSmall rather than returning a number that might be
    wrong.
    """
    base = {int(s): int(c) for s, c in caps.items()}
    if any(c < 0 for c in base.values()):
        raise ValueError("caps are pole bounds, so nonnegative")
    values = []
    for bump in (0, 1, 2):
        shifted = {s: c + bump for s, c in base.items()}
        value, certified = evaluation(shifted)
        if not certified:
            raise CapTooSmall(
                f"window at caps {shifted} carries no surjectivity certificate",
                caps=shifted,
            )
        values.append(value)
    if not (values[0] == values[1] == values[2]):
        raise CapTooSmall(
            f"window values kept moving past caps {base}: {values}",
            caps=base,
        )
    return StabilizedResult(
        values[0], base, {"offsets": (0, 1, 2), "certified": True}
    )


def window_report(window: QWindow) -> dict:
    """The standard report payload for one q-window."""
    return window.report()
