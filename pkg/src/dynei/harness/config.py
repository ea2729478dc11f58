"""INI-style run configuration.

A ``[run]`` section sets defaults for the CLI flags; ``[experiment.<id>]``
sections override scalar settings of registry entries::

    [run]
    seed = 3
    workers = 4

    [experiment.periodic-points]
    n_replicas = 10
    p = 0.995
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .registry import ExperimentSpec, Settings

_RUN_KEYS = {"points": int, "replicas": int, "seed": int, "workers": int, "full_scale": bool,
             "format": str, "out": str}
_EXPERIMENT_KEYS = {"p": float, "m": int, "n_points": int, "n_replicas": int, "seed": int,
                    "t": float, "n_windows": int, "n_pilot": int}


@dataclass
class RunConfig:
    run: dict = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)

    def settings(self) -> Settings:
        r = self.run
        return Settings(r.get("points"), r.get("replicas"), r.get("seed"), r.get("full_scale", False),
                        r.get("workers", 1))

    def apply(self, spec: ExperimentSpec) -> ExperimentSpec:
        kw = self.experiments.get(spec.id)
        return replace(spec, **kw) if kw else spec


def _convert(section: configparser.SectionProxy, keys: dict, where: str) -> dict:
    out = {}
    for k in section:
        if k not in keys:
            raise ValueError(f"{where}: unknown key {k!r}")
        typ = keys[k]
        try:
            out[k] = section.getboolean(k) if typ is bool else typ(section[k])
        except ValueError as e:
            raise ValueError(f"{where}: bad value for {k}: {section[k]!r}") from e
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text, source=source)
    cfg = RunConfig()
    for name in cp.sections():
        if name == "run":
            cfg.run = _convert(cp[name], _RUN_KEYS, f"{source} [run]")
        elif name.startswith("experiment."):
            cfg.experiments[name.split(".", 1)[1]] = _convert(cp[name], _EXPERIMENT_KEYS, f"{source} [{name}]")
        else:
            raise ValueError(f"{source}: unknown section [{name}]")
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))
