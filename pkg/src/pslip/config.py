"""Flat ``key = value`` run configuration for the command line tool."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .params import DriveParams, OscParams

__all__ = ["RunConfig", "DEFAULTS", "parse_text", "load", "dump"]

# key -> (type, default); None means unset
DEFAULTS = {
    "delta": (float, 0.3),
    "lam": (float, 0.5),
    "g": (float, 1.0),
    "kappa": (float, 1e-3),
    "omega_p": (float, 1.0),
    "T": (float, None),
    "n_B": (float, None),
    "alpha": (float, 1e-4),
    "phi_d": (float, 0.0),
    "regime": (str, "auto"),
    "eps": (float, 0.05),
    "sweep": (str, "nu"),
    "sweep_min": (float, None),
    "sweep_max": (float, None),
    "points": (int, 401),
    "harmonics": (int, 0),
    "n_max": (int, 64),
    "grid": (int, 96),
    "portrait": (str, "phase"),
}

_CHOICES = {
    "regime": ("auto", "classical", "quantum", "bifurcation"),
    "sweep": ("nu", "delta", "n_B"),
    "portrait": ("phase", "fragility"),
}


def _coerce(key, raw):
    if key not in DEFAULTS:
        raise ValidationError(f"unknown config key {key!r}", field=key)
    typ, _ = DEFAULTS[key]
    if isinstance(raw, str):
        s = raw.strip()
        if s.lower() in ("", "none"):
            return None
        try:
            if typ is int:
                v = int(s)
            elif typ is float:
                v = float(s)
            else:
                v = s
        except ValueError:
            raise ValidationError(f"{key}: cannot parse {raw!r} as {typ.__name__}", field=key) from None
    else:
        v = raw
    if typ is float and v is not None and not math.isfinite(v):
        raise ValidationError(f"{key} must be finite", field=key)
    if key in _CHOICES and v not in _CHOICES[key]:
        raise ValidationError(f"{key} must be one of {', '.join(_CHOICES[key])}", field=key)
    return v


def parse_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected key = value", field=None)
        k, v = line.split("=", 1)
        k = k.strip()
        out[k] = _coerce(k, v)
    return out


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: d for k, (_, d) in DEFAULTS.items()}
        for k, v in self.values.items():
            merged[k] = _coerce(k, v)
        object.__setattr__(self, "values", merged)
        self._validate()

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, pairs) -> "RunConfig":
        """Apply ``key=value`` strings (command-line ``--set``)."""
        vals = dict(self.values)
        for item in pairs:
            if "=" not in item:
                raise ValidationError(f"--set expects key=value, got {item!r}", field=None)
            k, v = item.split("=", 1)
            vals[k.strip()] = _coerce(k.strip(), v)
        return RunConfig(vals)

    def _validate(self):
        v = self.values
        if not v["kappa"] > 0:
            raise ValidationError("kappa must be positive (instanton time scale is 1/kappa)", field="kappa")
        if v["T"] is not None and v["n_B"] is not None:
            raise ValidationError("set either T or n_B, not both", field="T")
        if v["points"] < 2:
            raise ValidationError("points must be at least 2", field="points")
        if v["n_max"] < 1:
            raise ValidationError("n_max must be positive", field="n_max")
        if v["grid"] < 64:
            raise ValidationError("grid must be at least 64", field="grid")
        if v["harmonics"] < 0:
            raise ValidationError("harmonics must be >= 0 (0 picks a window automatically)", field="harmonics")
        if v["sweep_min"] is not None and v["sweep_max"] is not None and not v["sweep_min"] < v["sweep_max"]:
            raise ValidationError("sweep_min must be below sweep_max", field="sweep_min")
        if v["regime"] != "bifurcation":
            self.params()

    def params(self) -> OscParams:
        v = self.values
        return OscParams(
            delta=v["delta"], lam=v["lam"], g=v["g"], kappa=v["kappa"],
            omega_p=v["omega_p"], T=v["T"], n_B=v["n_B"],
        )

    def drive(self, nu=0.0) -> DriveParams:
        return DriveParams(alpha=self["alpha"], nu=nu, phi_d=self["phi_d"])

    def dump(self) -> str:
        return dump(self)


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return RunConfig(parse_text(fh.read()))


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump(cfg: RunConfig) -> str:
    """Sorted ``key = value`` text; parse and dump again gives the same text."""
    return "".join(f"{k} = {_fmt(cfg.values[k])}\n" for k in sorted(cfg.values))
