from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from omnistereo.errors import CoverageExceeds360, InvalidOverlap, UnknownPreset
from omnistereo.fov_zones import DEFAULT_H, PRESET_OVERLAP, VisionMode, compute_zones, preset


@pytest.mark.parametrize(
    "name, S, M, B, total",
    [
        ("gecko", 76, 240, 44, 316),
        ("herbivorous", 76, 240, 44, 316),
        ("spider", 136, 120, 104, 256),
        ("carnivorous", 136, 120, 104, 256),
        ("human", 196, 0, 164, 196),
        ("stick_bug", 150, 92, 118, 242),
    ],
)
def test_presets_exact(name, S, M, B, total):
    mode = preset(name)
    assert (mode.S, mode.M, mode.B, mode.total_fov) == (S, M, B, total)
    assert all(isinstance(v, Fraction) and v.denominator == 1 for v in (mode.S, mode.M, mode.B))
    d = mode.to_dict()
    assert (d["S"], d["M"], d["B"], d["total_fov"]) == (S, M, B, total)
    assert all(type(d[k]) is int for k in ("H", "O", "S", "M", "B", "total_fov"))


def test_compute_zones_examples():
    assert compute_zones(196, 76) == (76, 240, 44)
    assert compute_zones(196, 136) == (136, 120, 104)
    assert compute_zones(196, 196) == (196, 0, 164)


def test_no_overlap_exceeds_full_circle():
    with pytest.raises(CoverageExceeds360):
        compute_zones(196, 0)


def test_overlap_larger_than_fov():
    with pytest.raises(InvalidOverlap):
        compute_zones(196, 197)
    with pytest.raises(InvalidOverlap):
        compute_zones(196, -1)


def test_preset_lookup():
    assert preset("Stick-Bug").name == "stick_bug"
    assert preset("gecko").H == DEFAULT_H == 196
    with pytest.raises(UnknownPreset):
        preset("owl")
    assert set(PRESET_OVERLAP) == {"herbivorous", "gecko", "carnivorous", "spider", "human", "stick_bug"}


def test_blind_zone_offset():
    # with H = 196, B = O - 32
    for O in (32, 76, 100, 196):
        assert compute_zones(196, O)[2] == O - 32


def test_decimal_fov_kept_exact():
    S, M, B = compute_zones(195.95, 76)
    assert M == Fraction("239.9") and S + M + B == 360


@given(
    H=st.fractions(min_value=0, max_value=360, max_denominator=1000),
    t=st.fractions(min_value=0, max_value=1, max_denominator=1000),
)
def test_zones_sum_to_full_circle(H, t):
    O = H * t
    if 2 * H - O > 360:
        with pytest.raises(CoverageExceeds360):
            compute_zones(H, O)
        return
    S, M, B = compute_zones(H, O)
    assert S + M + B == 360
    assert min(S, M, B) >= 0


@given(
    O=st.integers(32, 190),
    delta=st.integers(1, 6),
)
def test_zone_slopes(O, delta):
    S0, M0, B0 = compute_zones(196, O)
    S1, M1, B1 = compute_zones(196, O + delta)
    assert (S1 - S0, M1 - M0, B1 - B0) == (delta, -2 * delta, delta)


def test_vision_mode_validates():
    with pytest.raises(CoverageExceeds360):
        VisionMode("wide", 196, 10)
