"""Two-tier link configuration: user-facing fields, ``*_hidden`` physical
constants and a PDK descriptor, merged into one resolved :class:`LinkConfig`.

Precedence per field is user > hidden override > default.  The winner for
every hidden field is recorded in :attr:`LinkConfig.provenance` so the
datasheet can flag overrides.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

SCHEMA_VERSION = "1.0"

PkgType = Literal["si", "org"]
HIDDEN_SECTIONS = ("channel_hidden", "adaptation_hidden", "area_hidden", "sim_hidden")


class ConfigError(ValueError):
    """Raised for any invalid configuration; ``errors`` holds (json_pointer, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{ptr or '/'}: {msg}" for ptr, msg in errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# --------------------------------------------------------------------------- PDK


class UnitInverter(_Strict):
    c_in_fF: float = Field(gt=0)
    r_on_n_ohm: float = Field(gt=0)
    r_on_p_ohm: float = Field(gt=0)
    c_out_fF: float = Field(ge=0)


class PdkDescriptor(_Strict):
    """Process abstraction: supply, width limits, fin quantization and a unit-inverter calibration.

    The shipped ``generic*`` descriptors are representative, literature-plausible
    numbers; they are not foundry data.
    """

    name: str
    vdd_V: float = Field(gt=0)
    device_type: Literal["planar", "finfet"]
    l_gate_um: float = Field(gt=0)
    w_min_um: float = Field(gt=0)
    w_max_um: float = Field(gt=0)
    fin_w0_um: float | None = Field(default=None, gt=0)
    fin_pitch_contrib_um: float | None = Field(default=None, gt=0)
    unit_inv: UnitInverter
    corner: str = "tt"

    @model_validator(mode="after")
    def _check(self) -> "PdkDescriptor":
        if self.w_min_um > self.w_max_um:
            raise ValueError("w_min_um must not exceed w_max_um")
        has_fin = self.fin_w0_um is not None and self.fin_pitch_contrib_um is not None
        if self.device_type == "finfet" and not has_fin:
            raise ValueError("finfet descriptors must define fin_w0_um and fin_pitch_contrib_um")
        if self.device_type == "planar" and (self.fin_w0_um is not None or self.fin_pitch_contrib_um is not None):
            raise ValueError("planar descriptors must not define fin constants")
        return self


SHIPPED_PDKS = ("generic16", "generic65", "generic45")


def load_pdk(name_or_path: str | Path) -> PdkDescriptor:
    """Load a shipped descriptor by name, or any descriptor JSON by path."""
    if str(name_or_path) in SHIPPED_PDKS:
        text = resources.files("d2dlink.pdks").joinpath(f"{name_or_path}.json").read_text()
    else:
        path = Path(name_or_path)
        if not path.is_file():
            raise ConfigError([("/pdk", f"unknown PDK {name_or_path!r} (shipped: {', '.join(SHIPPED_PDKS)})")])
        text = path.read_text()
    try:
        return PdkDescriptor.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(_pointer_errors(exc, prefix="/pdk")) from None


# ------------------------------------------------------------------ hidden tiers


class TraceBase(_Strict):
    c_fF_per_mm: float = Field(gt=0)
    r_ohm_per_mm: float = Field(gt=0)
    ref_width_um: float = Field(gt=0)


class EsdRow(_Strict):
    max_pitch_um: float = Field(gt=0)
    pkg_type: Literal["si", "org", "any"]
    c_esd_fF: float = Field(ge=0)


DEFAULT_TRACE_BASE = {
    "si": TraceBase(c_fF_per_mm=185.0, r_ohm_per_mm=1.04, ref_width_um=3.0),
    "org": TraceBase(c_fF_per_mm=138.0, r_ohm_per_mm=0.036, ref_width_um=30.0),
}
DEFAULT_ESD_TABLE = (
    EsdRow(max_pitch_um=25.0, pkg_type="si", c_esd_fF=40.0),
    EsdRow(max_pitch_um=55.0, pkg_type="any", c_esd_fF=80.0),
    EsdRow(max_pitch_um=130.0, pkg_type="org", c_esd_fF=150.0),
)
# t_ox calibrated so 1/2*C_pad*V^2 at 0.8 V lands on ~63 fJ (org, 112.64 um) and ~4.5 fJ (si, 25 um)
PKG_T_OX_UM = {"org": 1.42, "si": 0.99}
PKG_BUMP_HEIGHT_UM = {"org": 50.0, "si": 15.0}
# pad-to-plane dielectric under the package-side pad: organic build-up layer vs interposer BEOL
PKG_T_INT_UM = {"org": 20.0, "si": 0.99}
BUMP_DIAMETER_FRAC = 0.6


class ChannelHidden(_Strict):
    eps_r_ild: float = Field(3.9, ge=1)
    t_ox_um: float | None = Field(None, gt=0, description="ILD thickness; default 1.42 (org) / 0.99 (si)")
    t_int_um: float | None = Field(None, gt=0, description="package-side pad dielectric; default 20 (org) / 0.99 (si)")
    eps_r_underfill: float = Field(3.5, ge=1)
    bump_resistivity_ohm_m: float = Field(1.68e-8, gt=0)
    bump_diameter_um: float | None = Field(None, gt=0, description="default 0.6 x bump pitch")
    bump_height_um: float | None = Field(None, gt=0, description="default 50 (org) / 15 (si)")
    trace_width_um: float | None = Field(None, gt=0, description="default: trace_base ref width")
    trace_eps_ratio: float = Field(1.0, gt=0)
    trace_base: dict[PkgType, TraceBase] = Field(default_factory=lambda: dict(DEFAULT_TRACE_BASE))
    pad_r_ref_ohm: float = Field(0.5, ge=0)
    pad_w_ref_um: float = Field(50.0, gt=0)
    esd_table: tuple[EsdRow, ...] = DEFAULT_ESD_TABLE

    @field_validator("esd_table")
    @classmethod
    def _sorted(cls, rows: tuple[EsdRow, ...]) -> tuple[EsdRow, ...]:
        if not rows:
            raise ValueError("esd_table must not be empty")
        pitches = [r.max_pitch_um for r in rows]
        if pitches != sorted(pitches):
            raise ValueError("esd_table rows must be sorted ascending by max_pitch_um")
        return rows


class UntermPoint(_Strict):
    data_rate_Gbps: float = Field(gt=0)
    l_unterm_mm: float = Field(gt=0)


DEFAULT_UNTERM = (
    UntermPoint(data_rate_Gbps=8, l_unterm_mm=25),
    UntermPoint(data_rate_Gbps=16, l_unterm_mm=18),
    UntermPoint(data_rate_Gbps=32, l_unterm_mm=12),
    UntermPoint(data_rate_Gbps=48, l_unterm_mm=9),
)


class AdaptationHidden(_Strict):
    unterm_boundary: tuple[UntermPoint, ...] = DEFAULT_UNTERM
    c_base_ac_F: float = Field(1e-12, gt=0)
    eq_loss_thresholds_dB: tuple[float, float, float, float] = (1.0, 2.0, 3.5, 5.0)
    eq_latency_cap_ui: float = Field(0.25, gt=0)
    r_rx_ohm: float = Field(50.0, gt=0)
    r_bias_ohm: float = Field(1e6, gt=0)

    @field_validator("unterm_boundary")
    @classmethod
    def _rates_ascending(cls, pts: tuple[UntermPoint, ...]) -> tuple[UntermPoint, ...]:
        rates = [p.data_rate_Gbps for p in pts]
        if not pts or rates != sorted(rates):
            raise ValueError("unterm_boundary must be non-empty and ascending in data_rate_Gbps")
        return pts

    @field_validator("eq_loss_thresholds_dB")
    @classmethod
    def _ascending(cls, th: tuple[float, ...]) -> tuple[float, ...]:
        if list(th) != sorted(th) or len(set(th)) != len(th):
            raise ValueError("eq_loss_thresholds_dB must be strictly ascending")
        return th


class AreaHidden(_Strict):
    layout_margin: float = Field(3.0, ge=1)
    poly_r_sheet_ohm_sq: float = Field(200.0, gt=0)
    poly_strip_width_um: float = Field(0.4, gt=0)
    mim_density_fF_per_um2: float = Field(2.0, gt=0)
    esd_diode_density_fF_per_um2: float = Field(1.0, gt=0)
    ubm_overhang_um: float = Field(20.0, ge=0)
    hybrid_bond_max_pitch_um: float = Field(10.0, gt=0)
    lef_pin_layer: str = Field("PAD", min_length=1, pattern=r"^\S+$")


class SimHidden(_Strict):
    activity_factor: float = Field(0.5, gt=0, le=1)
    short_circuit_frac: float = Field(0.1, ge=0)
    latency_budget_ui: float = Field(16.0, gt=0)
    overdrive_frac: float = Field(0.5, gt=0, le=0.5, description="input overdrive past vdd/2 (fraction of vdd) for full device drive")
    n_slews: int = Field(5, ge=1)
    n_loads: int = Field(5, ge=1)
    slew_min_ui: float = Field(0.05, gt=0)
    slew_max_ui: float = Field(1.0, gt=0)
    load_min_mult: float = Field(0.5, gt=0)
    load_max_mult: float = Field(4.0, gt=0)
    tx_input_slew_ui: float = Field(0.1, gt=0)
    rx_load_fanout: float = Field(16.0, gt=0, description="RX output load in unit-inverter input caps")
    grid_min_mult: float = Field(0.25, gt=0)
    grid_max_mult: float = Field(4.0, gt=0)
    tx_search_budget: int = Field(24, ge=1)
    tx_search_lo: float = Field(0.25, gt=0)
    tx_search_hi: float = Field(8.0, gt=0)
    tx_search_tol: float = Field(0.02, gt=0)
    rx_search_refine_iters: int = Field(6, ge=0)
    steps_per_ui: float = Field(200.0, gt=0)
    steps_per_tau: float = Field(20.0, gt=0)
    settle_tol_frac: float = Field(1e-3, gt=0)


class HiddenConfig(_Strict):
    channel_hidden: ChannelHidden = ChannelHidden()
    adaptation_hidden: AdaptationHidden = AdaptationHidden()
    area_hidden: AreaHidden = AreaHidden()
    sim_hidden: SimHidden = SimHidden()


# -------------------------------------------------------------------- user tier


class ManualSizing(_Strict):
    tx_widths_um: tuple[float, ...] = Field(min_length=2)
    rx_preamp_width_um: float = Field(gt=0)
    rx_buffer_width_um: float = Field(gt=0)

    @field_validator("tx_widths_um")
    @classmethod
    def _even_positive(cls, w: tuple[float, ...]) -> tuple[float, ...]:
        if len(w) % 2:
            raise ValueError("TX chain needs an even stage count")
        if any(x <= 0 for x in w):
            raise ValueError("widths must be positive")
        return w


class UserConfig(_Strict):
    pkg_type: PkgType
    reach_mm: float = Field(gt=0)
    bump_pitch_um: float = Field(gt=0)
    data_rate_Gbps: float = Field(gt=0)
    lane_count: int = Field(gt=0)
    passive_eq_en: bool = False
    ac_coupled: bool = False
    pad_cap_mode: Literal["phys", "ucie"] = "phys"
    sizing_mode: Literal["manual", "tx_sizing", "rx_sizing", "co_opt"] = "co_opt"
    pareto_selection: Literal["balanced", "best_power", "best_delay", "all"] = "balanced"
    coupling_enabled: bool = False
    cc_ratio_trace: float = Field(0.4, ge=0, le=1)
    cc_ratio_pad: float = Field(0.1, ge=0, le=1)
    cc_rx_pad_fF: float = Field(0.5, ge=0)
    bump_map_path: str | None = None
    save_netlists: bool = True
    save_lib: bool = True
    save_metrics_csv: bool = True
    generate_verilog: bool = True
    generate_lef: bool = True
    n_tx_configs: int = Field(8, gt=0)
    n_rx_configs: int = Field(8, gt=0)
    max_parallel: int = Field(4, gt=0)
    rise_fall_pct_ui: float = Field(0.35, gt=0, le=1)
    max_rx_delay_frac_ui: float = Field(0.5, gt=0, le=1)
    input_slews_ns_override: tuple[float, ...] | None = None
    rx_slew_source: Literal["tx_pad", "channel"] = "channel"
    manual_sizing: ManualSizing | None = None

    @field_validator("input_slews_ns_override")
    @classmethod
    def _slews(cls, v: tuple[float, ...] | None) -> tuple[float, ...] | None:
        if v is not None:
            if not v or any(x <= 0 for x in v) or list(v) != sorted(set(v)):
                raise ValueError("input slews must be positive, unique and ascending")
        return v

    @model_validator(mode="after")
    def _manual(self) -> "UserConfig":
        if self.sizing_mode == "manual" and self.manual_sizing is None:
            raise ValueError("sizing_mode=manual requires manual_sizing widths")
        return self


class SweepAxes(_Strict):
    pkg_types: tuple[PkgType, ...] | None = None
    reaches_mm: tuple[float, ...] | None = None
    bump_pitches_um: tuple[float, ...] | None = None
    data_rates_Gbps: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _non_empty(self) -> "SweepAxes":
        for name in ("pkg_types", "reaches_mm", "bump_pitches_um", "data_rates_Gbps"):
            vals = getattr(self, name)
            if vals is not None:
                if len(vals) == 0:
                    raise ValueError(f"sweep axis {name} is empty")
                if name != "pkg_types" and any(x <= 0 for x in vals):
                    raise ValueError(f"sweep axis {name} must be positive")
        return self


class ConfigFile(UserConfig):
    """Everything a JSON config file may contain."""

    pdk: str | PdkDescriptor = "generic16"
    pdk_path: str | None = None
    channel_hidden: ChannelHidden = ChannelHidden()
    adaptation_hidden: AdaptationHidden = AdaptationHidden()
    area_hidden: AreaHidden = AreaHidden()
    sim_hidden: SimHidden = SimHidden()
    sweep: SweepAxes | None = None


USER_FIELDS = tuple(UserConfig.model_fields)


# ------------------------------------------------------------------ resolution


@dataclass(frozen=True)
class LinkConfig:
    """Resolved configuration for one link instance."""

    user: UserConfig
    hidden: HiddenConfig
    pdk: PdkDescriptor
    provenance: Mapping[str, str]
    source: Mapping[str, Any] = field(repr=False)
    base_dir: Path | None = field(default=None, repr=False, compare=False)

    # convenience views
    @property
    def channel(self) -> ChannelHidden:
        return self.hidden.channel_hidden

    @property
    def adaptation(self) -> AdaptationHidden:
        return self.hidden.adaptation_hidden

    @property
    def area(self) -> AreaHidden:
        return self.hidden.area_hidden

    @property
    def sim(self) -> SimHidden:
        return self.hidden.sim_hidden

    @property
    def vdd(self) -> float:
        return self.pdk.vdd_V

    @property
    def ui_s(self) -> float:
        return 1e-9 / self.user.data_rate_Gbps

    @property
    def latency_budget_s(self) -> float:
        return self.sim.latency_budget_ui * self.ui_s

    @property
    def f_ny_hz(self) -> float:
        return self.user.data_rate_Gbps * 1e9 / 2

    def overrides(self) -> list[str]:
        return sorted(k for k, v in self.provenance.items() if v == "override")

    def to_input_dict(self) -> dict[str, Any]:
        """Round-trippable JSON form: explicit user fields and overrides only."""
        return copy.deepcopy(dict(self.source))

    def resolved_dict(self) -> dict[str, Any]:
        """Every resolved value, for datasheets and debugging."""
        out = self.user.model_dump(mode="json")
        out.update(self.hidden.model_dump(mode="json"))
        out["pdk"] = self.pdk.model_dump(mode="json")
        return out

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.resolved_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **user_updates: Any) -> "LinkConfig":
        src = self.to_input_dict()
        src.update(user_updates)
        return from_dict(src, base_dir=self.base_dir)

    def resolve_path(self, p: str) -> Path:
        path = Path(p)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return path


def _pointer_errors(exc: ValidationError, prefix: str = "") -> list[tuple[str, str]]:
    out = []
    for err in exc.errors():
        loc = [str(x) for x in err["loc"] if not str(x).startswith(("function-after", "function-before"))]
        # pydantic tags union members (str | PdkDescriptor) in loc; drop those
        loc = [x for x in loc if x not in ("str", "PdkDescriptor")]
        ptr = prefix + "".join("/" + x.replace("~", "~0").replace("/", "~1") for x in loc)
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        out.append((ptr or "/", msg))
    return out


def _resolve_hidden(cf: ConfigFile) -> tuple[HiddenConfig, dict[str, str]]:
    prov: dict[str, str] = {}
    sections = {}
    for sec in HIDDEN_SECTIONS:
        model = getattr(cf, sec)
        for name in type(model).model_fields:
            prov[f"{sec}.{name}"] = "override" if name in model.model_fields_set else "default"
        sections[sec] = model
    ch = sections["channel_hidden"]
    updates = {}
    if ch.t_ox_um is None:
        updates["t_ox_um"] = PKG_T_OX_UM[cf.pkg_type]
    if ch.t_int_um is None:
        updates["t_int_um"] = PKG_T_INT_UM[cf.pkg_type]
    if ch.bump_diameter_um is None:
        updates["bump_diameter_um"] = BUMP_DIAMETER_FRAC * cf.bump_pitch_um
    if ch.bump_height_um is None:
        updates["bump_height_um"] = PKG_BUMP_HEIGHT_UM[cf.pkg_type]
    if ch.trace_width_um is None:
        base = ch.trace_base.get(cf.pkg_type, DEFAULT_TRACE_BASE[cf.pkg_type])
        updates["trace_width_um"] = base.ref_width_um
    if cf.pkg_type not in ch.trace_base:
        updates["trace_base"] = {**ch.trace_base, cf.pkg_type: DEFAULT_TRACE_BASE[cf.pkg_type]}
    sections["channel_hidden"] = ch.model_copy(update=updates)
    return HiddenConfig(**sections), prov


def from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> LinkConfig:
    """Validate and merge a config mapping (already parsed from JSON)."""
    if not isinstance(data, Mapping):
        raise ConfigError([("/", "config must be a JSON object")])
    try:
        cf = ConfigFile.model_validate(dict(data))
    except ValidationError as exc:
        raise ConfigError(_pointer_errors(exc)) from None

    if cf.pdk_path is not None and "pdk" in cf.model_fields_set:
        raise ConfigError([("/pdk_path", "give either pdk or pdk_path, not both")])
    if cf.pdk_path is not None:
        path = Path(cf.pdk_path)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        pdk = load_pdk(path)
    elif isinstance(cf.pdk, PdkDescriptor):
        pdk = cf.pdk
    else:
        pdk = load_pdk(cf.pdk)

    ch = cf.channel_hidden
    diameter = ch.bump_diameter_um if ch.bump_diameter_um is not None else BUMP_DIAMETER_FRAC * cf.bump_pitch_um
    if diameter >= cf.bump_pitch_um:
        raise ConfigError([("/channel_hidden/bump_diameter_um", "bump diameter must be smaller than the bump pitch")])

    hidden, prov = _resolve_hidden(cf)
    for name in USER_FIELDS:
        prov[name] = "user" if name in cf.model_fields_set else "default"
    prov["pdk"] = "user" if ("pdk" in cf.model_fields_set or cf.pdk_path) else "default"

    user = UserConfig.model_validate({k: getattr(cf, k) for k in USER_FIELDS})
    source = json.loads(json.dumps(dict(data)))
    source.pop("sweep", None)
    return LinkConfig(user=user, hidden=hidden, pdk=pdk, provenance=prov, source=source, base_dir=base_dir)


def load_config(path: str | Path) -> LinkConfig:
    """Load, validate and merge one JSON config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([("/", f"config file not found: {path}")])
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([("/", f"invalid JSON: {exc}")]) from None
    return from_dict(data, base_dir=path.parent.resolve())


# ---------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    pkg_types: tuple[str, ...]
    reaches_mm: tuple[float, ...]
    bump_pitches_um: tuple[float, ...]
    data_rates_Gbps: tuple[float, ...]
    base: LinkConfig

    @property
    def size(self) -> int:
        return len(self.pkg_types) * len(self.reaches_mm) * len(self.bump_pitches_um) * len(self.data_rates_Gbps)


def sweep_from_file(path: str | Path) -> SweepSpec:
    path = Path(path)
    base = load_config(path)
    raw = json.loads(path.read_text())
    return sweep_from_dict(raw.get("sweep") or {}, base)


def sweep_from_dict(axes: Mapping[str, Any], base: LinkConfig) -> SweepSpec:
    try:
        ax = SweepAxes.model_validate(dict(axes))
    except ValidationError as exc:
        raise ConfigError(_pointer_errors(exc, prefix="/sweep")) from None
    u = base.user
    return SweepSpec(
        pkg_types=ax.pkg_types or (u.pkg_type,),
        reaches_mm=ax.reaches_mm or (u.reach_mm,),
        bump_pitches_um=ax.bump_pitches_um or (u.bump_pitch_um,),
        data_rates_Gbps=ax.data_rates_Gbps or (u.data_rate_Gbps,),
        base=base,
    )


def point_dirname(pkg: str, reach: float, pitch: float, rate: float) -> str:
    return f"{pkg}_r{reach:.1f}_p{pitch:.1f}_d{rate:.1f}"


def expand_sweep(spec: SweepSpec) -> list[tuple[str, LinkConfig]]:
    """Full Cartesian product in (pkg, reach, pitch, rate) order, with output subdirectory names."""
    axes = (spec.pkg_types, spec.reaches_mm, spec.bump_pitches_um, spec.data_rates_Gbps)
    for name, vals in zip(("pkg_types", "reaches_mm", "bump_pitches_um", "data_rates_Gbps"), axes):
        if not vals:
            raise ConfigError([(f"/sweep/{name}", "sweep axis is empty")])
    base_src = spec.base.to_input_dict()
    points = []
    seen: dict[str, tuple] = {}
    for pkg, reach, pitch, rate in itertools.product(*axes):
        name = point_dirname(pkg, reach, pitch, rate)
        if name in seen:
            raise ConfigError([("/sweep", f"points {seen[name]} and {(pkg, reach, pitch, rate)} map to the same directory {name}")])
        seen[name] = (pkg, reach, pitch, rate)
        src = dict(base_src)
        src.update(pkg_type=pkg, reach_mm=reach, bump_pitch_um=pitch, data_rate_Gbps=rate)
        # geometry tied to the base pitch must follow the swept pitch
        points.append((name, from_dict(src, base_dir=spec.base.base_dir)))
    return points


def config_schema() -> dict[str, Any]:
    schema = ConfigFile.model_json_schema()
    schema["$comment"] = f"d2dlink config schema version {SCHEMA_VERSION}"
    return schema


def is_close(a: float, b: float, rel: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)
