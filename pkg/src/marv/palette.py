"""Frozen color constants for every chart, in one place.

Glyph colors come from three colorblind-safe sequential schemes (purple,
blue, red), one per skewness column, with luminance stepping along the
kurtosis axis. The stacked-bins chart uses a magenta/green/gray triple and
the temporal tracker a gray-to-orange ramp so the three charts can never
be confused with each other. Viewers must render these exact values; the
protocol handshake ships them, and :func:`write_palette` exports the same
constants as JSON for embedding.
"""
from __future__ import annotations

import json
from pathlib import Path

RGBA = tuple[float, float, float, float]


def _hex(code: str, alpha: float = 1.0) -> RGBA:
    code = code.lstrip("#")
    r, g, b = (int(code[i : i + 2], 16) / 255 for i in (0, 2, 4))
    # pre-round to the scene format's 6 significant digits so palette
    # constants survive a serialize/parse round trip byte-identically
    return tuple(float(f"{v:.6g}") for v in (r, g, b, alpha))  # type: ignore[return-value]


# 9-class sequential schemes, darkest first.
_PURPLES = ("3f007d", "54278f", "6a51a3", "807dba", "9e9ac8",
            "bcbddc", "dadaeb", "efedf5", "fcfbfd")
_BLUES = ("08306b", "08519c", "2171b5", "4292c6", "6baed6",
          "9ecae1", "c6dbef", "deebf7", "f7fbff")
_REDS = ("67000d", "a50f15", "cb181d", "ef3b2c", "fb6a4a",
         "fc9272", "fcbba1", "fee0d2", "fff5f0")

_HUES = (_PURPLES, _BLUES, _REDS)

# CATEGORICAL[col][row]: col 0/1/2 = left/center/right skewness column
# (purple/blue/red), row 0/1/2 = low/center/high kurtosis (dark -> light).
CATEGORICAL: tuple[tuple[RGBA, ...], ...] = tuple(
    (_hex(hue[2]), _hex(hue[4]), _hex(hue[6])) for hue in _HUES
)

# DETAILED[col][step]: nine-step single-hue ramp, darkest (0) to lightest (8).
DETAILED: tuple[tuple[RGBA, ...], ...] = tuple(
    tuple(_hex(code) for code in hue) for hue in _HUES
)

# Reserved glyph colors.
DEGENERATE_NEUTRAL: RGBA = _hex("9e9e9e")   # zero-variance attribute
OUT_OF_FOCUS: RGBA = _hex("cccccc")         # outside the detailed-view focus

# Stacked-bins chart.
CHRONO_INCREASE: RGBA = _hex("d01c8b")      # magenta
CHRONO_DECREASE: RGBA = _hex("4dac26")      # green
CHRONO_UNCHANGED: RGBA = _hex("bdbdbd")     # gray
CHRONO_BIN: RGBA = _hex("969696")

# Temporal tracker link ramp endpoints (linear interpolation between them).
TET_RAMP_LIGHT: RGBA = _hex("d9d9d9")
TET_RAMP_DARK: RGBA = _hex("8c2d04")
TET_CUBE: RGBA = _hex("808080")

# Spatial fiber views.
FIBER_BASE: RGBA = _hex("a6a6a6")
HIGHLIGHT_EARLIER: RGBA = _hex("e31a1c")    # red
HIGHLIGHT_LATER: RGBA = _hex("ffd92f")      # yellow

HANDLE_GRAY: RGBA = _hex("808080")
LABEL_COLOR: RGBA = _hex("262626")
SELECTION_BOX: RGBA = (1.0, 1.0, 1.0, 0.25)


def tet_ramp(t: float) -> RGBA:
    """Link color for a normalized drift value in [0, 1]."""
    t = min(1.0, max(0.0, t))
    mixed = tuple(
        a + (b - a) * t for a, b in zip(TET_RAMP_LIGHT, TET_RAMP_DARK)
    )
    return tuple(float(f"{v:.6g}") for v in mixed)  # type: ignore[return-value]


def palette_dict() -> dict:
    """All named constants as plain lists, for the handshake and JSON export."""
    return {
        "categorical": [[list(c) for c in col] for col in CATEGORICAL],
        "detailed": [[list(c) for c in col] for col in DETAILED],
        "degenerateNeutral": list(DEGENERATE_NEUTRAL),
        "outOfFocus": list(OUT_OF_FOCUS),
        "chronoIncrease": list(CHRONO_INCREASE),
        "chronoDecrease": list(CHRONO_DECREASE),
        "chronoUnchanged": list(CHRONO_UNCHANGED),
        "chronoBin": list(CHRONO_BIN),
        "tetRampLight": list(TET_RAMP_LIGHT),
        "tetRampDark": list(TET_RAMP_DARK),
        "tetCube": list(TET_CUBE),
        "fiberBase": list(FIBER_BASE),
        "highlightEarlier": list(HIGHLIGHT_EARLIER),
        "highlightLater": list(HIGHLIGHT_LATER),
        "handleGray": list(HANDLE_GRAY),
        "labelColor": list(LABEL_COLOR),
        "selectionBox": list(SELECTION_BOX),
    }


def write_palette(path: str | Path) -> None:
    """Export the palette as indented JSON for viewer embedding."""
    Path(path).write_text(
        json.dumps(palette_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
