"""Strict key-value config parsing for the command-line tool.

The format is a flat INI-like text: `[block]` headers followed by
`key = value` lines, `#`/`;` comments.  Parsing is deliberately strict.
Unknown blocks and keys are fatal (with an edit-distance hint), every
diagnostic carries the offending key and line number, and values are
range-checked at parse time.  A silent typo in a physics parameter is
the costliest failure mode this tool has, so nothing is ignored.

`render_config` writes the canonical form; `parse_config(render_config(cfg))`
reproduces `cfg` exactly (floats via repr round-trip).
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ConfigError, DomainError
from .model import PhysicalParams, SystemParams, normalize
from .quantum import HilbertSpec
from .spectra import BACKENDS, SweepConfig

COMMANDS = (
    "steady",
    "sweep",
    "evolve",
    "validate",
    "derive-coupling",
    "dephasing-scan",
)
FORMATS = ("csv", "json", "svg")
UNITS = ("kappa_a", "SI")


@dataclass(frozen=True)
class EvolveSettings:
    """Mean-field trajectory integration settings."""

    t_end: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12


@dataclass(frozen=True)
class ValidateSettings:
    """Grid and truncation for the cross-backend validation suite."""

    delta_min: float = -1.5
    delta_max: float = 1.5
    n_points: int = 11
    n_a: int = 5
    n_b: int = 5


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description.

    `system` is always stored normalized (kappa_a == 1).  The units the
    file used and the kappa_a value it carried are kept for reporting
    but excluded from equality, so round-tripping through the canonical
    renderer compares equal.
    """

    command: str
    system: SystemParams
    output_dir: str = "."
    formats: tuple[str, ...] = ("csv", "json")
    physical: PhysicalParams | None = None
    sweep: SweepConfig | None = None
    evolve: EvolveSettings | None = None
    dephasing: tuple[float, ...] | None = None
    validate: ValidateSettings | None = None
    system_units: str = field(default="kappa_a", compare=False)
    kappa_a_input: float = field(default=1.0, compare=False)
    # the un-normalized [system] block as parsed, kept so SI configs render
    # back in their own units (rates rescaled twice would drift by an ulp)
    system_si: SystemParams | None = field(default=None, compare=False)


def _num(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}") from None


def _intval(raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ValueError(f"expected an integer, got {raw!r}") from None


def _cplx(raw: str) -> complex:
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise ValueError(
            f"expected a real or complex number, got {raw!r}"
        ) from None


def _enum(options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        if raw in options:
            return raw
        msg = f"must be one of {', '.join(options)}, got {raw!r}"
        hint = difflib.get_close_matches(raw, options, n=1, cutoff=0.6)
        if hint:
            msg += f" (did you mean {hint[0]!r}?)"
        raise ValueError(msg)

    return parse


def _formats(raw: str) -> tuple[str, ...]:
    picked = set()
    for item in raw.split(","):
        name = item.strip()
        if name not in FORMATS:
            raise ValueError(
                f"unknown format {name!r}; choose from {', '.join(FORMATS)}"
            )
        picked.add(name)
    if not picked:
        raise ValueError("expected at least one format")
    return tuple(f for f in FORMATS if f in picked)


def _float_list(raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_num(s) for s in items)


@dataclass(frozen=True)
class _Field:
    parse: Callable[[str], Any]
    required: bool = False
    default: Any = None
    check: Callable[[Any], bool] | None = None
    check_msg: str = ""


_POS = (lambda v: v > 0, "must be > 0")
_NONNEG = (lambda v: v >= 0, "must be >= 0")
_TOL = (lambda v: 0 < v <= 1e-2, "must be in (0, 1e-2]")
_GE2 = (lambda v: v >= 2, "must be >= 2")

_SCHEMA: dict[str, dict[str, _Field]] = {
    "run": {
        "command": _Field(_enum(COMMANDS), required=True),
        "out": _Field(str, default="."),
        "formats": _Field(_formats, default=("csv", "json")),
    },
    "system": {
        "units": _Field(_enum(UNITS), default="kappa_a"),
        "delta_p": _Field(_num, default=0.0),
        "delta_b_offset": _Field(_num, default=0.0),
        "delta_q_offset": _Field(_num, default=0.0),
        "lambda": _Field(_num, required=True, check=_NONNEG[0], check_msg=_NONNEG[1]),
        "g": _Field(_num, required=True, check=_NONNEG[0], check_msg=_NONNEG[1]),
        "epsilon": _Field(_cplx, required=True),
        "kappa_a": _Field(_num, required=True, check=_POS[0], check_msg=_POS[1]),
        "kappa_b": _Field(_num, required=True, check=_NONNEG[0], check_msg=_NONNEG[1]),
        "gamma": _Field(_num, required=True, check=_NONNEG[0], check_msg=_NONNEG[1]),
        "gamma_phi": _Field(_num, required=True, check=_NONNEG[0], check_msg=_NONNEG[1]),
    },
    "physical": {
        key: _Field(_num, required=True, check=_POS[0], check_msg=_POS[1])
        for key in ("d", "V0", "C0", "M", "m", "omega", "nu", "k_l", "Omega")
    },
    "sweep": {
        "delta_min": _Field(_num, required=True),
        "delta_max": _Field(_num, required=True),
        "n_points": _Field(_intval, required=True, check=_GE2[0], check_msg=_GE2[1]),
        "backend": _Field(_enum(BACKENDS), default="analytic"),
        "n_a": _Field(_intval, default=5, check=_GE2[0], check_msg=_GE2[1]),
        "n_b": _Field(_intval, default=5, check=_GE2[0], check_msg=_GE2[1]),
    },
    "evolve": {
        "t_end": _Field(_num, required=True, check=_POS[0], check_msg=_POS[1]),
        "rel_tol": _Field(_num, default=1e-8, check=_TOL[0], check_msg=_TOL[1]),
        "abs_tol": _Field(_num, default=1e-12, check=_TOL[0], check_msg=_TOL[1]),
    },
    "dephasing": {
        "gamma_phi_values": _Field(_float_list, required=True),
    },
    "validate": {
        "delta_min": _Field(_num, default=-1.5),
        "delta_max": _Field(_num, default=1.5),
        "n_points": _Field(_intval, default=11, check=_GE2[0], check_msg=_GE2[1]),
        "n_a": _Field(_intval, default=5, check=_GE2[0], check_msg=_GE2[1]),
        "n_b": _Field(_intval, default=5, check=_GE2[0], check_msg=_GE2[1]),
    },
}

# optional physical constants, validated like the rest but not required
for _key in ("q_e", "k_c", "hbar"):
    _SCHEMA["physical"][_key] = _Field(_num, check=_POS[0], check_msg=_POS[1])

_REQUIRED_BLOCKS: dict[str, tuple[str, ...]] = {
    "steady": ("system",),
    "sweep": ("system", "sweep"),
    "evolve": ("system", "evolve"),
    "validate": ("system",),
    "derive-coupling": ("system", "physical"),
    "dephasing-scan": ("system", "dephasing"),
}


def _suggest(name: str, options) -> str:
    hit = difflib.get_close_matches(name, list(options), n=1, cutoff=0.6)
    return f" (did you mean {hit[0]!r}?)" if hit else ""


def _tokenize(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    """Split into blocks of raw key/value strings with line numbers."""
    blocks: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line
        for marker in ("#", ";"):
            pos = line.find(marker)
            if pos >= 0:
                line = line[:pos]
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(
                    f"line {lineno}: unknown block [{name}]"
                    + _suggest(name, _SCHEMA)
                )
            if name in blocks:
                raise ConfigError(f"line {lineno}: duplicate block [{name}]")
            blocks[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected `key = value`, got {line!r}"
            )
        if current is None:
            raise ConfigError(
                f"line {lineno}: key outside any [block]: {line!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1].strip()
        schema = _SCHEMA[current]
        if key not in schema:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{current}]"
                + _suggest(key, schema)
            )
        if key in blocks[current]:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} in [{current}]"
            )
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        blocks[current][key] = (value, lineno)
    return blocks


def _apply_schema(block: str, raw: dict[str, tuple[str, int]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, spec in _SCHEMA[block].items():
        if key not in raw:
            if spec.required:
                raise ConfigError(f"[{block}]: missing required key {key!r}")
            out[key] = spec.default
            continue
        value_str, lineno = raw[key]
        try:
            value = spec.parse(value_str)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        if spec.check is not None and not spec.check(value):
            raise ConfigError(
                f"line {lineno}: {key} {spec.check_msg}, got {value_str}"
            )
        out[key] = value
    return out


def parse_config(text: str) -> RunConfig:
    """Parse config text into a validated RunConfig.

    Every error names the offending key and line.  The [system] block is
    normalized on ingestion; with units = "SI" the raw kappa_a is kept in
    `kappa_a_input` so SI-rate reporting stays possible.
    """
    blocks = _tokenize(text)
    if "run" not in blocks:
        raise ConfigError("missing [run] block (must set `command`)")
    run = _apply_schema("run", blocks["run"])
    command = run["command"]

    for need in _REQUIRED_BLOCKS[command]:
        if need not in blocks:
            raise ConfigError(
                f"command {command!r} requires a [{need}] block"
            )

    values = {b: _apply_schema(b, blocks[b]) for b in blocks if b != "run"}

    sysv = values["system"]
    units = sysv["units"]
    if units == "kappa_a" and sysv["kappa_a"] != 1.0:
        raise ConfigError(
            'with units = "kappa_a" the kappa_a value must be 1 '
            f"(got {sysv['kappa_a']!r}); use units = \"SI\" for raw rates"
        )
    try:
        raw_system = SystemParams(
            delta_p=sysv["delta_p"],
            lam=sysv["lambda"],
            g=sysv["g"],
            epsilon=sysv["epsilon"],
            kappa_a=sysv["kappa_a"],
            kappa_b=sysv["kappa_b"],
            gamma=sysv["gamma"],
            gamma_phi=sysv["gamma_phi"],
            delta_b_offset=sysv["delta_b_offset"],
            delta_q_offset=sysv["delta_q_offset"],
        )
        system = normalize(raw_system)
    except DomainError as exc:
        raise ConfigError(f"[system]: {exc}") from None

    physical = None
    if "physical" in values:
        pv = values["physical"]
        kwargs = {k: pv[k] for k in _SCHEMA["physical"] if pv[k] is not None}
        try:
            physical = PhysicalParams(**kwargs)
        except DomainError as exc:
            raise ConfigError(f"[physical]: {exc}") from None

    sweep = None
    if "sweep" in values:
        sv = values["sweep"]
        if not sv["delta_min"] < sv["delta_max"]:
            raise ConfigError(
                "[sweep]: delta_min must be strictly less than delta_max"
            )
        spec = None
        if sv["backend"] == "quantum":
            try:
                spec = HilbertSpec(n_a=sv["n_a"], n_b=sv["n_b"])
            except DomainError as exc:
                raise ConfigError(f"[sweep]: {exc}") from None
        sweep = SweepConfig(
            base=system,
            delta_min=sv["delta_min"],
            delta_max=sv["delta_max"],
            n_points=sv["n_points"],
            backend=sv["backend"],
            quantum_spec=spec,
        )

    evolve = None
    if "evolve" in values:
        ev = values["evolve"]
        evolve = EvolveSettings(
            t_end=ev["t_end"], rel_tol=ev["rel_tol"], abs_tol=ev["abs_tol"]
        )

    dephasing = None
    if "dephasing" in values:
        dvals = values["dephasing"]["gamma_phi_values"]
        if any(v < 0 for v in dvals):
            raise ConfigError("[dephasing]: gamma_phi_values must be >= 0")
        dephasing = dvals

    validate = None
    if "validate" in values or command == "validate":
        vv = values.get("validate", _apply_schema("validate", {}))
        if not vv["delta_min"] < vv["delta_max"]:
            raise ConfigError(
                "[validate]: delta_min must be strictly less than delta_max"
            )
        validate = ValidateSettings(
            delta_min=vv["delta_min"],
            delta_max=vv["delta_max"],
            n_points=vv["n_points"],
            n_a=vv["n_a"],
            n_b=vv["n_b"],
        )

    if command == "derive-coupling" and units != "SI":
        raise ConfigError(
            'derive-coupling requires [system] units = "SI" so rates can be '
            "reported in both SI and kappa_a units"
        )

    return RunConfig(
        command=command,
        system=system,
        output_dir=run["out"],
        formats=run["formats"],
        physical=physical,
        sweep=sweep,
        evolve=evolve,
        dephasing=dephasing,
        validate=validate,
        system_units=units,
        kappa_a_input=sysv["kappa_a"],
        system_si=raw_system if units == "SI" else None,
    )


def render_config(cfg: RunConfig) -> str:
    """Write the canonical config text for a RunConfig.

    Emits every [system] key in the units the config used (the parsed
    values verbatim, floats via repr), so the output is self-contained
    and `parse_config` reproduces `cfg` exactly.
    """
    s = cfg.system_si if cfg.system_si is not None else cfg.system
    units = "SI" if cfg.system_si is not None else "kappa_a"
    lines = [
        "[run]",
        f"command = {cfg.command}",
        f"out = {cfg.output_dir}",
        f"formats = {','.join(cfg.formats)}",
        "",
        "[system]",
        f"units = {units}",
        f"delta_p = {s.delta_p!r}",
        f"delta_b_offset = {s.delta_b_offset!r}",
        f"delta_q_offset = {s.delta_q_offset!r}",
        f"lambda = {s.lam!r}",
        f"g = {s.g!r}",
        f"epsilon = {s.epsilon!r}",
        f"kappa_a = {s.kappa_a!r}",
        f"kappa_b = {s.kappa_b!r}",
        f"gamma = {s.gamma!r}",
        f"gamma_phi = {s.gamma_phi!r}",
    ]
    if cfg.physical is not None:
        p = cfg.physical
        lines += [
            "",
            "[physical]",
            f"d = {p.d!r}",
            f"V0 = {p.V0!r}",
            f"C0 = {p.C0!r}",
            f"M = {p.M!r}",
            f"m = {p.m!r}",
            f"omega = {p.omega!r}",
            f"nu = {p.nu!r}",
            f"k_l = {p.k_l!r}",
            f"Omega = {p.Omega!r}",
            f"q_e = {p.q_e!r}",
            f"k_c = {p.k_c!r}",
            f"hbar = {p.hbar!r}",
        ]
    if cfg.sweep is not None:
        w = cfg.sweep
        spec = w.quantum_spec
        lines += [
            "",
            "[sweep]",
            f"delta_min = {w.delta_min!r}",
            f"delta_max = {w.delta_max!r}",
            f"n_points = {w.n_points}",
            f"backend = {w.backend}",
            f"n_a = {spec.n_a if spec else 5}",
            f"n_b = {spec.n_b if spec else 5}",
        ]
    if cfg.evolve is not None:
        e = cfg.evolve
        lines += [
            "",
            "[evolve]",
            f"t_end = {e.t_end!r}",
            f"rel_tol = {e.rel_tol!r}",
            f"abs_tol = {e.abs_tol!r}",
        ]
    if cfg.dephasing is not None:
        lines += [
            "",
            "[dephasing]",
            f"gamma_phi_values = {', '.join(repr(v) for v in cfg.dephasing)}",
        ]
    if cfg.validate is not None:
        v = cfg.validate
        lines += [
            "",
            "[validate]",
            f"delta_min = {v.delta_min!r}",
            f"delta_max = {v.delta_max!r}",
            f"n_points = {v.n_points}",
            f"n_a = {v.n_a}",
            f"n_b = {v.n_b}",
        ]
    return "\n".join(lines) + "\n"
