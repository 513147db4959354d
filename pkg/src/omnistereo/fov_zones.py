"""Horizontal field-of-view budget of a two-camera rig.

For two co-aligned cameras of horizontal FOV H whose views overlap by O
degrees:

    S = O            (stereo measuring zone)
    M = 2H - 2O      (seen by exactly one camera)
    B = 360 - S - M  (seen by neither)

Angles are kept as Fractions so that preset identities hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import CoverageExceeds360, InvalidOverlap, UnknownPreset

DEFAULT_H = Fraction(196)


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal reading, so 195.95 becomes 3919/20 rather than its binary expansion
        return Fraction(repr(x))
    return Fraction(x)


def compute_zones(H, O) -> tuple[Fraction, Fraction, Fraction]:
    H, O = _exact(H), _exact(O)
    if O < 0 or O > H:
        raise InvalidOverlap(f"overlap {O} must lie in [0, H={H}]")
    if 2 * H - O > 360:
        raise CoverageExceeds360(f"2H - O = {2 * H - O} exceeds 360 degrees")
    S = O
    M = 2 * H - 2 * O
    B = 360 - S - M
    return S, M, B


@dataclass(frozen=True)
class VisionMode:
    name: str
    H: Fraction
    O: Fraction

    def __post_init__(self):
        object.__setattr__(self, "H", _exact(self.H))
        object.__setattr__(self, "O", _exact(self.O))
        compute_zones(self.H, self.O)

    @property
    def S(self) -> Fraction:
        return compute_zones(self.H, self.O)[0]

    @property
    def M(self) -> Fraction:
        return compute_zones(self.H, self.O)[1]

    @property
    def B(self) -> Fraction:
        return compute_zones(self.H, self.O)[2]

    @property
    def total_fov(self) -> Fraction:
        return self.S + self.M

    def to_dict(self) -> dict:
        def num(x: Fraction):
            return int(x) if x.denominator == 1 else float(x)

        return {
            "name": self.name,
            "H": num(self.H),
            "O": num(self.O),
            "S": num(self.S),
            "M": num(self.M),
            "B": num(self.B),
            "total_fov": num(self.total_fov),
        }


# overlap angles per named configuration, H = 196 deg throughout
PRESET_OVERLAP = {
    "herbivorous": 76,
    "gecko": 76,
    "carnivorous": 136,
    "spider": 136,
    "human": 196,
    "stick_bug": 150,
}


def preset(name: str, H=DEFAULT_H) -> VisionMode:
    key = name.strip().lower().replace("-", "_")
    if key not in PRESET_OVERLAP:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_OVERLAP)}")
    return VisionMode(key, H, PRESET_OVERLAP[key])
