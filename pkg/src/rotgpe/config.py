"""INI run configuration with validation errors that point at the offending line."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, fields

from .evolve import EvolveConfig
from .functionals import Params
from .grid import GridSpec
from .minimize import FlowConfig, Seed


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


SECTIONS = {
    "params": {"gamma", "gamma0", "v0", "omega_rot", "k3", "rho", "test_mode"},
    "grid": {"half_width", "n"},
    "evolve": {"dt", "t_end", "log_every", "linear_mode"},
    "flow": {"tau", "tol_energy", "tol_residual", "max_iter", "seed", "alpha"},
    "initial": {"kind", "amplitude", "perturbation"},
    "run": {"seed", "out_dir"},
}
REQUIRED = {"params": ("gamma", "omega_rot", "rho")}


@dataclass
class RunConfig:
    params: Params
    grid: GridSpec
    evolve: EvolveConfig | None = None
    flow: FlowConfig | None = None
    seed: int = 0
    out_dir: str = "."
    initial: str = "gaussian:auto"
    initial_amplitude: float = 1.0
    initial_perturbation: float = 0.0

    def resolved_text(self) -> str:
        """Every resolved value as an INI document (written to ``manifest.txt``)."""
        lines = ["[params]"]
        for f in fields(self.params):
            lines.append(f"{f.name} = {getattr(self.params, f.name)!r}")
        lines.append(f"# regime = {self.params.regime.value}")
        lines += ["", "[grid]", f"half_width = {self.grid.half_width!r}", f"n = {self.grid.n}"]
        if self.evolve is not None:
            lines += ["", "[evolve]"] + [f"{f.name} = {getattr(self.evolve, f.name)!r}" for f in fields(self.evolve)]
        if self.flow is not None:
            lines += ["", "[flow]"]
            for f in fields(self.flow):
                val = getattr(self.flow, f.name)
                if val is None:
                    continue
                lines.append(f"{'seed' if f.name == 'seed_kind' else f.name} = {val}")
        lines += ["", "[initial]", f"kind = {self.initial}", f"amplitude = {self.initial_amplitude!r}",
                  f"perturbation = {self.initial_perturbation!r}"]
        lines += ["", "[run]", f"seed = {self.seed}", f"out_dir = {self.out_dir}", ""]
        return "\n".join(lines)


def _line_index(text):
    """Map ``(section, key)`` and ``section`` to 1-based line numbers."""
    index = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            index.setdefault(section, i)
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = i
    return index


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed configuration ({exc.__class__.__name__})", line=line) from exc
    where = _line_index(text)

    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line=where.get(section))
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key in [{section}]", key=key, line=where.get((section, key)))
    for section, keys in REQUIRED.items():
        if section not in parser:
            raise ConfigError(f"missing section [{section}]", key=keys[0])
        for key in keys:
            if key not in parser[section]:
                raise ConfigError(f"missing required key in [{section}]", key=key, line=where.get(section))

    def get(section, key, kind=float, default=None):
        if section not in parser or key not in parser[section]:
            return default
        raw = parser[section][key].strip()
        line = where.get((section, key))
        try:
            if kind is bool:
                return parser.getboolean(section, key)
            if kind is int:
                val = int(raw)
            elif kind is float:
                val = float(raw)
            else:
                val = raw
        except ValueError:
            raise ConfigError(f"expected {kind.__name__}, got {raw!r}", key=key, line=line) from None
        return val

    def check(cond, key, section, message):
        if not cond:
            raise ConfigError(message, key=key, line=where.get((section, key)))

    test_mode = get("params", "test_mode", bool, False)
    gamma = get("params", "gamma")
    check(gamma == gamma and gamma != float("inf"), "gamma", "params", "gamma must be finite")
    check(gamma > 0 or (gamma == 0 and test_mode), "gamma", "params", "gamma must be > 0")
    omega_raw = parser["params"]["omega_rot"].strip()
    if omega_raw.lower() == "critical":
        omega = gamma  # assignment, not arithmetic: keeps the regime test exact
    else:
        omega = get("params", "omega_rot")
    check(omega >= 0, "omega_rot", "params", "omega_rot must be >= 0")
    gamma0 = get("params", "gamma0", float, 1.0)
    check(gamma0 > 0, "gamma0", "params", "gamma0 must be > 0")
    v0 = get("params", "v0", float, 0.0)
    check(v0 >= 0, "v0", "params", "v0 must be >= 0")
    k3 = get("params", "k3", float, 0.0)
    check(k3 >= 0, "k3", "params", "k3 must be >= 0")
    rho = get("params", "rho")
    check(rho > 0, "rho", "params", "rho must be > 0")
    try:
        params = Params(gamma=gamma, gamma0=gamma0, v0=v0, omega_rot=omega, k3=k3, rho=rho, test_mode=test_mode)
    except ValueError as exc:
        key = str(exc).split()[0]
        raise ConfigError(str(exc), key=key, line=where.get(("params", key))) from None

    half_width = get("grid", "half_width", float, 12.0)
    check(half_width > 0, "half_width", "grid", "half_width must be > 0")
    n = get("grid", "n", int, 256)
    check(n >= 8 and n & (n - 1) == 0, "n", "grid", "n must be a power of two >= 8")
    grid = GridSpec(half_width, n)

    evolve_cfg = None
    if "evolve" in parser:
        dt = get("evolve", "dt", float, 1e-3)
        check(dt > 0, "dt", "evolve", "dt must be > 0")
        t_end = get("evolve", "t_end", float, 1.0)
        check(t_end >= 0, "t_end", "evolve", "t_end must be >= 0")
        log_every = get("evolve", "log_every", int, 100)
        check(log_every >= 1, "log_every", "evolve", "log_every must be >= 1")
        evolve_cfg = EvolveConfig(dt, t_end, log_every, get("evolve", "linear_mode", bool, False))

    flow_cfg = None
    if "flow" in parser:
        seed_text = get("flow", "seed", str, "gaussian:0.5")
        try:
            seed_kind = Seed.parse(seed_text)
        except ValueError as exc:
            raise ConfigError(str(exc), key="seed", line=where.get(("flow", "seed"))) from None
        kwargs = {"seed_kind": seed_kind}
        for key, kind in (("tau", float), ("tol_energy", float), ("tol_residual", float),
                          ("max_iter", int), ("alpha", float)):
            val = get("flow", key, kind)
            if val is not None:
                kwargs[key] = val
        try:
            flow_cfg = FlowConfig(**kwargs)
        except ValueError as exc:
            key = str(exc).split()[0]
            raise ConfigError(str(exc), key=key, line=where.get(("flow", key))) from None

    initial = get("initial", "kind", str, "gaussian:auto")
    if initial.split(":")[0] not in ("gaussian", "vortex", "random", "file"):
        raise ConfigError(f"unknown initial kind {initial!r}", key="kind", line=where.get(("initial", "kind")))
    return RunConfig(
        params=params, grid=grid, evolve=evolve_cfg, flow=flow_cfg,
        seed=get("run", "seed", int, 0), out_dir=get("run", "out_dir", str, "."),
        initial=initial,
        initial_amplitude=get("initial", "amplitude", float, 1.0),
        initial_perturbation=get("initial", "perturbation", float, 0.0),
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
