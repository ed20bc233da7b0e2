"""Exact multivariate polynomials over Q with uninterpreted f-application atoms.

Every term of the input language normalizes into a ``Poly``: a canonically
ordered sum of monomials whose generators are either variables or whole
applications ``f(p)`` treated as opaque ring elements.  Two polynomials are
semantically equal over the reals iff they are structurally identical, which
is what makes coefficient extraction and formula deduplication sound.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

Q = Fraction


class VarsUnderF(ValueError):
    """A requested variable occurs inside an f-application argument."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {value!r}")


class Atom:
    """A ring generator: either a variable or an application f(p)."""

    __slots__ = ()

    @property
    def key(self):
        raise NotImplementedError


class Var(Atom):
    __slots__ = ("name", "_key")

    def __init__(self, name: str):
        self.name = name
        # Variables sort before applications so that purely arithmetic
        # monomials stay grouped in canonical forms.
        self._key = (0, name)

    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Var({self.name!r})"


class FApp(Atom):
    __slots__ = ("arg", "_key", "_hash")

    def __init__(self, arg: "Poly"):
        if not isinstance(arg, Poly):
            raise TypeError("FApp argument must be a Poly")
        self.arg = arg
        self._key = (1, arg.key)
        self._hash = hash(self._key)

    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, FApp) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"FApp({self.arg!r})"


class Monomial:
    """coefficient * product of atom powers; atoms sorted, exponents > 0."""

    __slots__ = ("coeff", "powers", "_powkey")

    def __init__(self, coeff: Fraction, powers: tuple):
        self.coeff = coeff
        self.powers = powers  # tuple[(Atom, int)] sorted by atom key
        self._powkey = tuple((a.key, e) for a, e in powers)

    @property
    def powkey(self):
        return self._powkey

    @property
    def sortkey(self):
        # Graded order: higher total degree first, then lexicographic with
        # earlier atoms and higher exponents first.  Used ascending.
        return (-self.degree, tuple((a.key, -e) for a, e in self.powers))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.powers)

    def __repr__(self):
        return f"Monomial({self.coeff!r}, {self.powers!r})"


def _merge_powers(pa: tuple, pb: tuple) -> tuple:
    """Multiply two power products (merge sorted atom/exponent lists)."""
    out = []
    i = j = 0
    while i < len(pa) and j < len(pb):
        a, ea = pa[i]
        b, eb = pb[j]
        if a.key == b.key:
            out.append((a, ea + eb))
            i += 1
            j += 1
        elif a.key < b.key:
            out.append((a, ea))
            i += 1
        else:
            out.append((b, eb))
            j += 1
    out.extend(pa[i:])
    out.extend(pb[j:])
    return tuple(out)


class Poly:
    """Canonical multivariate polynomial; immutable and hashable."""

    __slots__ = ("monomials", "_key", "_hash", "_atomkeys")

    def __init__(self, monomials: tuple):
        self.monomials = monomials  # sorted by powkey, descending
        self._key = None
        self._hash = None
        self._atomkeys = None

    # -- construction -------------------------------------------------

    @staticmethod
    def from_terms(terms: Mapping[tuple, tuple]) -> "Poly":
        """terms: powkey -> (powers, coeff). Drops zeros, sorts."""
        monos = [
            Monomial(coeff, powers)
            for powers, coeff in terms.values()
            if coeff != 0
        ]
        monos.sort(key=lambda m: m.sortkey)
        return Poly(tuple(monos))

    @staticmethod
    def const(value) -> "Poly":
        c = _as_fraction(value)
        if c == 0:
            return ZERO
        return Poly((Monomial(c, ()),))

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly((Monomial(Q(1), ((Var(name), 1),)),))

    @staticmethod
    def from_atom(atom: Atom) -> "Poly":
        return Poly((Monomial(Q(1), ((atom, 1),)),))

    @staticmethod
    def fapp(arg: "Poly") -> "Poly":
        return Poly.from_atom(FApp(arg))

    # -- canonical identity -------------------------------------------

    @property
    def key(self):
        # Coefficients are encoded so that positive sorts before negative;
        # this makes f(x+y) order before f(x-y), keeping derived sequences
        # aligned with the natural reading of the input.
        if self._key is None:
            self._key = tuple(
                (m.powkey, (0, m.coeff) if m.coeff > 0 else (1, -m.coeff))
                for m in self.monomials
            )
        return self._key

    def __eq__(self, other):
        return isinstance(other, Poly) and self.key == other.key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    # -- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.monomials

    def is_rational(self) -> bool:
        return not self.monomials or (
            len(self.monomials) == 1 and not self.monomials[0].powers
        )

    def as_rational(self) -> Fraction:
        if not self.monomials:
            return Q(0)
        if self.is_rational():
            return self.monomials[0].coeff
        raise ValueError(f"{self} is not a rational constant")

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.monomials), default=0)

    def leading_coeff(self) -> Fraction:
        return self.monomials[0].coeff if self.monomials else Q(0)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            return NotImplemented
        terms = {m.powkey: (m.powers, m.coeff) for m in self.monomials}
        for m in other.monomials:
            if m.powkey in terms:
                powers, coeff = terms[m.powkey]
                terms[m.powkey] = (powers, coeff + m.coeff)
            else:
                terms[m.powkey] = (m.powers, m.coeff)
        return Poly.from_terms(terms)

    def __neg__(self) -> "Poly":
        return Poly(tuple(Monomial(-m.coeff, m.powers) for m in self.monomials))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not isinstance(other, Poly):
            return NotImplemented
        terms: dict = {}
        for ma in self.monomials:
            for mb in other.monomials:
                powers = _merge_powers(ma.powers, mb.powers)
                powkey = tuple((a.key, e) for a, e in powers)
                coeff = ma.coeff * mb.coeff
                if powkey in terms:
                    _, old = terms[powkey]
                    terms[powkey] = (powers, old + coeff)
                else:
                    terms[powkey] = (powers, coeff)
        return Poly.from_terms(terms)

    def scale(self, value) -> "Poly":
        c = _as_fraction(value)
        if c == 0:
            return ZERO
        return Poly(tuple(Monomial(m.coeff * c, m.powers) for m in self.monomials))

    def __pow__(self, exponent: int) -> "Poly":
        if exponent < 0:
            raise ValueError("negative exponents are outside the polynomial ring")
        result = ONE
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- structure queries ----------------------------------------------

    def atoms(self) -> list:
        """Distinct atoms of the top ring level, in canonical order."""
        seen = {}
        for m in self.monomials:
            for a, _ in m.powers:
                seen.setdefault(a.key, a)
        return [seen[k] for k in sorted(seen)]

    def all_atoms(self) -> list:
        """Atoms at every nesting level (arguments included), canonical order."""
        seen = {}

        def walk(p: Poly):
            for m in p.monomials:
                for a, _ in m.powers:
                    if a.key not in seen:
                        seen[a.key] = a
                        if isinstance(a, FApp):
                            walk(a.arg)

        walk(self)
        return [seen[k] for k in sorted(seen)]

    def atom_keys(self) -> frozenset:
        """Keys of atoms at every nesting level; cached."""
        if self._atomkeys is None:
            keys = set()
            for m in self.monomials:
                for a, _ in m.powers:
                    keys.add(a.key)
                    if isinstance(a, FApp):
                        keys |= a.arg.atom_keys()
            self._atomkeys = frozenset(keys)
        return self._atomkeys

    def variables(self, recursive: bool = True) -> set:
        """Names of variables occurring in the polynomial."""
        out: set = set()

        def walk(p: Poly):
            for m in p.monomials:
                for a, _ in m.powers:
                    if isinstance(a, Var):
                        out.add(a.name)
                    elif recursive:
                        walk(a.arg)

        walk(self)
        return out

    def contains_fapp(self) -> bool:
        return any(
            isinstance(a, FApp) for m in self.monomials for a, _ in m.powers
        )

    def fapp_atoms(self, recursive: bool = True) -> list:
        """FApp atoms in canonical order; nested arguments included if asked."""
        return [
            a
            for a in (self.all_atoms() if recursive else self.atoms())
            if isinstance(a, FApp)
        ]

    def max_f_depth(self) -> int:
        depth = 0
        for m in self.monomials:
            for a, _ in m.powers:
                if isinstance(a, FApp):
                    depth = max(depth, 1 + a.arg.max_f_depth())
        return depth

    def size(self) -> int:
        """Expression-tree node count of the normal form."""
        if not self.monomials:
            return 1
        total = len(self.monomials) - 1  # the + nodes
        for m in self.monomials:
            factors = 0
            for a, e in m.powers:
                asize = 1 if isinstance(a, Var) else 1 + a.arg.size()
                factors += e * asize
                if e > 1:
                    factors += e - 1  # * nodes inside the power
            if m.coeff != 1 or not m.powers:
                factors += 1  # the coefficient node
            total += factors + max(len(m.powers) - 1, 0)
        return total

    # -- substitution and evaluation -------------------------------------

    def substitute(self, mapping: Mapping[str, "Poly"]) -> "Poly":
        """Simultaneously replace variables by polynomials, renormalizing.

        Applies inside f-application arguments recursively.
        """
        if not mapping:
            return self
        result = ZERO
        for m in self.monomials:
            term = Poly.const(m.coeff)
            for a, e in m.powers:
                if isinstance(a, Var):
                    repl = mapping.get(a.name)
                    base = repl if repl is not None else Poly.from_atom(a)
                else:
                    base = Poly.fapp(a.arg.substitute(mapping))
                term = term * (base ** e)
            result = result + term
        return result

    def substitute_atoms(self, mapping: Mapping[Atom, "Poly"]) -> "Poly":
        """Replace whole atoms by polynomials, bottom-up through arguments.

        Mapping images must already be fully reduced (no image contains a
        mapped atom), which callers maintain by substituting new entries
        into existing ones.
        """
        if not mapping:
            return self
        keys = self.atom_keys()
        if not any(a.key in keys for a in mapping):
            return self
        result = ZERO
        for m in self.monomials:
            term = Poly.const(m.coeff)
            for a, e in m.powers:
                if isinstance(a, FApp):
                    a = FApp(a.arg.substitute_atoms(mapping))
                repl = mapping.get(a)
                base = repl if repl is not None else Poly.from_atom(a)
                term = term * (base ** e)
            result = result + term
        return result

    def evaluate(
        self,
        point: Mapping[str, Fraction],
        f_interp: Callable[[Fraction], Fraction],
    ) -> Fraction:
        """Evaluate at a rational point with a concrete interpretation of f."""
        total = Q(0)
        for m in self.monomials:
            value = m.coeff
            for a, e in m.powers:
                if isinstance(a, Var):
                    if a.name not in point:
                        raise KeyError(f"no value for variable {a.name}")
                    base = _as_fraction(point[a.name])
                else:
                    base = _as_fraction(f_interp(a.arg.evaluate(point, f_interp)))
                value *= base ** e
            total += value
        return total

    def coefficients_wrt(self, var_names: Iterable[str]) -> dict:
        """View the polynomial over the given variables.

        Returns a mapping from exponent vectors (tuples of (name, exp),
        sorted by name) to coefficient polynomials free of those variables.
        Raises VarsUnderF when a requested variable hides inside an
        f-application argument, since the polynomial view would be invalid.
        """
        names = set(var_names)
        buckets: dict = {}
        for m in self.monomials:
            var_part = []
            rest_powers = []
            for a, e in m.powers:
                if isinstance(a, Var) and a.name in names:
                    var_part.append((a.name, e))
                else:
                    if isinstance(a, FApp) and (a.arg.variables() & names):
                        raise VarsUnderF(
                            f"variable(s) {sorted(a.arg.variables() & names)} "
                            "occur inside an f-application argument"
                        )
                    rest_powers.append((a, e))
            exponent = tuple(sorted(var_part))
            piece = Poly((Monomial(m.coeff, tuple(rest_powers)),))
            buckets[exponent] = buckets.get(exponent, ZERO) + piece
        return {k: v for k, v in buckets.items() if not v.is_zero()}

    # -- printing --------------------------------------------------------

    def __str__(self) -> str:
        return poly_to_str(self)

    def __repr__(self) -> str:
        return f"Poly<{poly_to_str(self)}>"


ZERO = Poly(())
ONE = Poly((Monomial(Q(1), ()),))


def poly_add(p: Poly, q: Poly) -> Poly:
    return p + q


def poly_mul(p: Poly, q: Poly) -> Poly:
    return p * q


def substitute(p: Poly, mapping: Mapping[str, Poly]) -> Poly:
    return p.substitute(mapping)


def evaluate(p: Poly, point, f_interp) -> Fraction:
    return p.evaluate(point, f_interp)


def coefficients_wrt(p: Poly, var_names: Iterable[str]) -> dict:
    return p.coefficients_wrt(var_names)


def _coeff_str(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _mono_str(m: Monomial) -> str:
    parts = []
    for a, e in m.powers:
        base = a.name if isinstance(a, Var) else f"f({poly_to_str(a.arg)})"
        parts.append(base if e == 1 else f"{base}^{e}")
    body = "*".join(parts)
    c = m.coeff
    if not body:
        return _coeff_str(c)
    if c == 1:
        return body
    if c == -1:
        return f"-{body}"
    return f"{_coeff_str(c)}*{body}"


def poly_to_str(p: Poly) -> str:
    if not p.monomials:
        return "0"
    out = _mono_str(p.monomials[0])
    for m in p.monomials[1:]:
        s = _mono_str(m)
        out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
    return out
