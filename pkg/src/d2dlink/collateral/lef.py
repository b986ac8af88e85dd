"""LEF 5.8 macro abstracts: a bump-map macro or per-lane txip/rxip abstracts."""

from __future__ import annotations

from dataclasses import dataclass

from .bumpmap import BumpMap

PAD_FRAC = 0.8
USE = {"tx": "SIGNAL", "rx": "SIGNAL", "vdd": "POWER", "vss": "GROUND", "other": "SIGNAL"}
DIRECTION = {"tx": "OUTPUT", "rx": "INPUT", "vdd": "INOUT", "vss": "INOUT", "other": "INOUT"}


@dataclass(frozen=True)
class LefPin:
    name: str
    direction: str
    use: str
    rect: tuple[float, float, float, float]


def _f(x: float) -> str:
    return f"{x:.3f}"


def _header() -> list[str]:
    return ["VERSION 5.8 ;", 'BUSBITCHARS "[]" ;', 'DIVIDERCHAR "/" ;', "",
            "UNITS", "  DATABASE MICRONS 1000 ;", "END UNITS", ""]


def _macro(name: str, w: float, h: float, pins: list[LefPin], layer: str) -> list[str]:
    out = [f"MACRO {name}", "  CLASS BLOCK ;", "  ORIGIN 0 0 ;", f"  SIZE {_f(w)} BY {_f(h)} ;", "  SYMMETRY X Y ;"]
    for p in pins:
        out += [f"  PIN {p.name}", f"    DIRECTION {p.direction} ;", f"    USE {p.use} ;", "    PORT",
                f"      LAYER {layer} ;", "        RECT " + " ".join(_f(v) for v in p.rect) + " ;",
                "    END", f"  END {p.name}"]
    out += [f"END {name}", ""]
    return out


def _square(cx: float, cy: float, side: float) -> tuple[float, float, float, float]:
    return (cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2)


def bump_pins(bm: BumpMap, pitch_um: float) -> list[LefPin]:
    """One pin per occupied site; row 0 of the map is the top edge of the macro."""
    counters = {k: 0 for k in USE}
    pins = []
    for r, c, role in bm.sites():
        i = counters[role]
        counters[role] += 1
        name = {"tx": f"tx_pad[{i}]", "rx": f"rx_pad[{i}]", "vdd": f"VDD_{i}", "vss": f"VSS_{i}",
                "other": f"OTHER_{i}"}[role]
        cx = (c + 0.5) * pitch_um
        cy = (bm.rows - r - 0.5) * pitch_um
        pins.append(LefPin(name, DIRECTION[role], USE[role], _square(cx, cy, PAD_FRAC * pitch_um)))
    return pins


def lane_pins(prefix: str, direction: str, lanes: int, pitch_um: float) -> list[LefPin]:
    return [LefPin(f"{prefix}[{i}]", direction, "SIGNAL", _square((i + 0.5) * pitch_um, pitch_um / 2, PAD_FRAC * pitch_um))
            for i in range(lanes)]


def write_lef(*, pitch_um: float, lanes: int, macro_w_um: float, macro_h_um: float,
              bump_map: BumpMap | None = None, mode: str = "auto", layer: str = "PAD",
              name: str = "d2d_bumps") -> str:
    """``mode`` is "bumps", "lanes" or "auto" (bumps when a map is given)."""
    if mode == "auto":
        mode = "bumps" if bump_map is not None else "lanes"
    lines = _header()
    if mode == "bumps":
        if bump_map is None:
            raise ValueError("bump-map LEF requested without a parsed bump map")
        lines += _macro(name, bump_map.cols * pitch_um, bump_map.rows * pitch_um, bump_pins(bump_map, pitch_um), layer)
    elif mode == "lanes":
        lines += _macro("txip", macro_w_um, macro_h_um, lane_pins("pad", "OUTPUT", lanes, pitch_um), layer)
        lines += _macro("rxip", macro_w_um, macro_h_um, lane_pins("pad", "INPUT", lanes, pitch_um), layer)
    else:
        raise ValueError(f"unknown LEF mode {mode!r}")
    lines.append("END LIBRARY")
    return "\n".join(lines) + "\n"


def parse_lef_macros(text: str) -> dict[str, dict]:
    """Minimal reader: {macro: {"size": (w, h), "pins": {name: rect}}} for checks and tests."""
    macros: dict[str, dict] = {}
    cur = pin = None
    for raw in text.splitlines():
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "MACRO":
            cur = macros.setdefault(tok[1], {"size": None, "pins": {}})
        elif tok[0] == "SIZE" and cur is not None:
            cur["size"] = (float(tok[1]), float(tok[3]))
        elif tok[0] == "PIN" and cur is not None:
            pin = tok[1]
        elif tok[0] == "RECT" and cur is not None and pin is not None:
            cur["pins"][pin] = tuple(float(x) for x in tok[1:5])
        elif tok[0] == "END" and len(tok) > 1 and tok[1] == pin:
            pin = None
    return macros
