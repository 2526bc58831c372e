"""Decision tree for nilpotent singular points and the derived cyclicity bounds."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .series import INF
from .system_model import CharData


class Kind(str, Enum):
    NON_ISOLATED_AXIS = "NonIsolatedAxis"
    SADDLE = "Saddle"
    CENTER_OR_FOCUS = "CenterOrFocus"
    CUSP = "Cusp"
    SADDLE_NODE = "SaddleNode"
    ELLIPTIC_HYPERBOLIC = "EllipticHyperbolic"
    NODE = "Node"


@dataclass(frozen=True)
class SingularityClass:
    kind: Kind
    stability: str  # "attracting", "repelling" or "n/a"
    multiplicity: float  # m, INF for a singularity axis
    case_label: str
    discriminant: Fraction | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "stability": self.stability,
            "multiplicity": "inf" if self.multiplicity == INF else int(self.multiplicity),
            "case": self.case_label,
            "discriminant": None if self.discriminant is None else str(self.discriminant),
        }


def discriminant(a, b, n) -> Fraction:
    """``b**2 + 4 a (n + 1)``, exact."""
    return Fraction(b) ** 2 + 4 * Fraction(a) * (n + 1)


def classify(cd: CharData) -> SingularityClass:
    m, a, n, b = cd.m, cd.a, cd.n, cd.b
    if m == INF:
        return SingularityClass(Kind.NON_ISOLATED_AXIS, "n/a", INF, "1" if n == INF else "2")
    if n == INF:
        if m % 2 == 0:
            return SingularityClass(Kind.CUSP, "n/a", m, "3.ii")
        if a > 0:
            return SingularityClass(Kind.SADDLE, "n/a", m, "3.i")
        return SingularityClass(Kind.CENTER_OR_FOCUS, "n/a", m, "3.i")

    if m % 2 == 0:
        if m < 2 * n + 1:
            return SingularityClass(Kind.CUSP, "n/a", m, "4.i1")
        return SingularityClass(Kind.SADDLE_NODE, "n/a", m, "4.i2")
    if a > 0:
        return SingularityClass(Kind.SADDLE, "n/a", m, "4.ii")

    disc = discriminant(a, b, n) if m == 2 * n + 1 else None
    if m < 2 * n + 1 or (disc is not None and disc < 0):
        return SingularityClass(Kind.CENTER_OR_FOCUS, "n/a", m, "4.iii1", disc)
    # m > 2n+1, or m = 2n+1 with non-negative discriminant (boundary counts as node side)
    if n % 2 == 1:
        return SingularityClass(Kind.ELLIPTIC_HYPERBOLIC, "n/a", m, "4.iii2", disc)
    stability = "repelling" if b > 0 else "attracting"
    return SingularityClass(Kind.NODE, stability, m, "4.iii3", disc)


def node_cyclicity_lower_bound(m: int) -> int:
    """At least ``floor((m - 1)/2)`` limit cycles bifurcate from an m-multiple node."""
    if m % 2 == 0:
        raise ValueError("node multiplicity must be odd")
    if m < 3:
        raise ValueError("node multiplicity must be at least 3")
    return (m - 1) // 2


def cusp_cyclicity_bound(n: int) -> int:
    """Largest ``L`` with ``floor(3L/2) <= n`` (bound per the stated relation)."""
    if n < 1:
        raise ValueError("cusp order must be >= 1")
    L = 0
    while (3 * (L + 1)) // 2 <= n:
        L += 1
    return L
