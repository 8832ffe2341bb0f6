"""Process families, their parameters and the parameter-domain rules."""
from dataclasses import dataclass, field
from enum import Enum

from .errors import ParameterError


class Family(str, Enum):
    WFBM = "wfbm"
    SFBM = "sfbm"
    NSFBM = "nsfbm"
    ODD_BFBM = "odd_bfbm"
    ETA = "eta"
    FBM = "fbm"


class Regime(str, Enum):
    # weighted fBm: the two positive-definite wedges ...
    B_NONPOS = "B_NONPOS"
    B_POS = "B_POS"
    # ... and the three ways to leave them
    SUM_NEG = "SUM_NEG"
    B_GT_APLUS1 = "B_GT_APLUS1"
    B_GT1 = "B_GT1"
    # a <= -1 or b <= -1: the defining integral diverges
    DIVERGENT = "DIVERGENT"
    # single-parameter families
    IN_RANGE = "IN_RANGE"
    H_RANGE = "H_RANGE"


@dataclass(frozen=True)
class Domain:
    """Outcome of the parameter-domain rules, without a numerical witness."""

    valid: bool
    regime: Regime
    degenerate: str | None = None


def wfbm_domain(a, b):
    a = float(a)
    b = float(b)
    if not (a > -1 and b > -1):
        return Domain(False, Regime.DIVERGENT)
    if b <= 0:
        if 1 + a + b >= 0:
            return Domain(True, Regime.B_NONPOS)
        return Domain(False, Regime.SUM_NEG)
    if b > 1 + a:
        return Domain(False, Regime.B_GT_APLUS1)
    if b > 1:
        return Domain(False, Regime.B_GT1)
    return Domain(True, Regime.B_POS, "DEGENERATE_B1" if b == 1 else None)


def family_domain(family, a=None, b=None, h=None, hurst=None):
    family = Family(family)
    if family is Family.WFBM:
        if a is None or b is None:
            raise ParameterError("wfbm needs both a and b")
        return wfbm_domain(a, b)
    if family is Family.ETA:
        return Domain(True, Regime.IN_RANGE)
    if family is Family.FBM:
        if hurst is None:
            raise ParameterError("fbm needs a Hurst parameter")
        ok = 0 < hurst < 1
        return Domain(ok, Regime.IN_RANGE if ok else Regime.H_RANGE)
    if h is None:
        raise ParameterError(f"{family.value} needs h")
    h = float(h)
    if family is Family.SFBM:
        ok = 0 < h <= 2
    elif family is Family.NSFBM:
        ok = 2 <= h <= 4
    else:
        ok = 2 < h < 4
    if not ok:
        return Domain(False, Regime.H_RANGE)
    degenerate = None
    if family in (Family.SFBM, Family.NSFBM):
        if h == 2:
            degenerate = "DEGENERATE_H2"
        elif h == 4:
            degenerate = "RANK_ONE_H4"
    return Domain(True, Regime.IN_RANGE, degenerate)


@dataclass(frozen=True)
class FamilySpec:
    """A process family together with its parameters.

    Construction validates the parameters; use the classmethods rather than
    the raw constructor.
    """

    family: Family
    a: float | None = None
    b: float | None = None
    h: float | None = None
    hurst: float | None = None
    domain: Domain = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("a", "b", "h", "hurst"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))
        dom = family_domain(self.family, self.a, self.b, self.h, self.hurst)
        if not dom.valid:
            raise ParameterError(
                f"{self.family.value} parameters {self.params()} are outside the "
                f"positive-definite range (regime {dom.regime.value})", verdict=dom)
        object.__setattr__(self, "domain", dom)

    @classmethod
    def wfbm(cls, a, b):
        return cls(Family.WFBM, a=a, b=b)

    @classmethod
    def sfbm(cls, h):
        return cls(Family.SFBM, h=h)

    @classmethod
    def nsfbm(cls, h):
        return cls(Family.NSFBM, h=h)

    @classmethod
    def odd_bfbm(cls, h):
        return cls(Family.ODD_BFBM, h=h)

    @classmethod
    def eta(cls):
        return cls(Family.ETA)

    @classmethod
    def fbm(cls, hurst):
        return cls(Family.FBM, hurst=hurst)

    def params(self):
        return {k: getattr(self, k) for k in ("a", "b", "h", "hurst")
                if getattr(self, k) is not None}

    def to_dict(self):
        return {"family": self.family.value, **self.params()}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        return cls(data.pop("family"), **data)

    @property
    def self_similarity_index(self):
        if self.family is Family.WFBM:
            return (1 + self.a + self.b) / 2
        if self.family in (Family.SFBM, Family.NSFBM):
            return self.h / 2
        if self.family is Family.ODD_BFBM:
            return (self.h - 2) / 2
        if self.family is Family.ETA:
            return 1.0
        return self.hurst

    @property
    def degenerate(self):
        return self.domain.degenerate

    def __str__(self):
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.family.value}({inner})"
