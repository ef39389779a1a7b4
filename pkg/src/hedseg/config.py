"""Run configuration: flat ``key = value`` files overridden by CLI flags.

Keys match the long flag names with dashes or underscores
(``sigma-color`` and ``sigma_color`` are the same key). Lines starting
with ``#`` are comments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from hedseg.harness import DEFAULT_C, DEFAULT_C_GRID, EvalSettings, RegimeThresholds
from hedseg.hedonic import DEFAULT_MAX_SWEEPS, ONE_COALITION, SINGLETON
from hedseg.pixelgraph import GraphParams

ENV_VAR = "HEDSEG_CONFIG"

_INIT_ALIASES = {"singleton": SINGLETON, "one": ONE_COALITION, ONE_COALITION: ONE_COALITION,
                 "both": "both"}


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("", "none", "unlimited") else int(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class Config:
    sigma_color: float = GraphParams.sigma_color
    sigma_edge: float = GraphParams.sigma_edge
    eps: float = GraphParams.eps_discard
    canny_low: float = GraphParams.canny_low
    canny_high: float = GraphParams.canny_high
    c: float | None = None
    gamma: float | None = None
    init: str = SINGLETON
    lmax: int | None = None
    tau: float = 0.1
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    cohesive_single: float = RegimeThresholds.cohesive_single
    cohesive_gap: float = RegimeThresholds.cohesive_gap
    failure_union: float = RegimeThresholds.failure_union
    dataset: str | None = None
    image_glob: str = "src_color/*.png"
    gt_glob: str = "human_seg/*.png"
    mask_mode: str = "nonzero"
    c_values: tuple[float, ...] = DEFAULT_C_GRID
    gamma_values: tuple[float, ...] | None = None
    out: str = "hedseg_out"
    jobs: int | None = None
    record_timing: bool = False
    _explicit: set = field(default_factory=set, repr=False, compare=False)

    _PARSERS = {
        "sigma_color": float, "sigma_edge": float, "eps": float, "canny_low": float,
        "canny_high": float, "c": float, "gamma": float, "init": str,
        "lmax": _optional_int, "tau": float, "max_sweeps": int,
        "cohesive_single": float, "cohesive_gap": float, "failure_union": float,
        "dataset": str, "image_glob": str, "gt_glob": str, "mask_mode": str,
        "c_values": _floats, "gamma_values": _floats, "out": str,
        "jobs": _optional_int, "record_timing": _bool,
    }

    def set(self, key: str, value) -> None:
        key = key.strip().replace("-", "_")
        if key not in self._PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str) and not value.strip():
            value = None
        elif isinstance(value, str):
            try:
                value = self._PARSERS[key](value.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        setattr(self, key, value)
        if value is not None:
            self._explicit.add(key)
        else:
            self._explicit.discard(key)

    def validate(self) -> Config:
        if "c" in self._explicit and "gamma" in self._explicit:
            raise ConfigError("set either c or gamma, not both")
        if self.init not in _INIT_ALIASES:
            raise ConfigError(f"unknown init {self.init!r}")
        self.init = _INIT_ALIASES[self.init]
        if self.gamma is not None and not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.c is not None and not self.c > 0:
            raise ConfigError("c must be positive")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be positive")
        if self.lmax is not None and self.lmax < 1:
            raise ConfigError("lmax must be positive")
        try:
            self.graph_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @property
    def resolution_c(self) -> float | None:
        """The ``c`` to use, or None when an absolute gamma governs."""
        if self.gamma is not None:
            return None
        return self.c if self.c is not None else DEFAULT_C

    @property
    def inits(self) -> tuple[str, ...]:
        return (SINGLETON, ONE_COALITION) if self.init == "both" else (self.init,)

    def graph_params(self) -> GraphParams:
        return GraphParams(
            sigma_color=self.sigma_color, sigma_edge=self.sigma_edge,
            eps_discard=self.eps, canny_low=self.canny_low, canny_high=self.canny_high,
        )

    def eval_settings(self) -> EvalSettings:
        return EvalSettings(
            params=self.graph_params(), l_max=self.lmax, max_sweeps=self.max_sweeps,
            mask_mode=self.mask_mode, record_timing=self.record_timing,
        )

    def thresholds(self) -> RegimeThresholds:
        return RegimeThresholds(self.cohesive_single, self.cohesive_gap, self.failure_union)

    def dump(self) -> str:
        lines = []
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = " ".join(repr(x) for x in v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


def parse_config_text(text: str, cfg: Config | None = None) -> Config:
    cfg = cfg if cfg is not None else Config()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        cfg.set(key, value)
    return cfg


def load_config(path=None, overrides: dict | None = None) -> Config:
    """File (explicit path, else $HEDSEG_CONFIG) then flag overrides."""
    cfg = Config()
    path = path or os.environ.get(ENV_VAR)
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        parse_config_text(p.read_text(), cfg)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg.set(key, value)
    return cfg.validate()
