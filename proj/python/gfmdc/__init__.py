"""Python interface to the gfmdc grid-forming BESS simulator."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from . import _gfmdc
from ._gfmdc import (
    ConfigError,
    TraceFormatError,
    compute_base_impedance,
    design_filter,
    inverse_park,
    measure_power,
    park,
    preset_names,
)

__all__ = [
    "ConfigError",
    "RunResult",
    "TraceFormatError",
    "check_preset",
    "compare",
    "compute_base_impedance",
    "design_filter",
    "inverse_park",
    "load_config",
    "measure_power",
    "park",
    "preset",
    "preset_names",
    "run",
    "run_preset",
]


@dataclass
class RunResult:
    status: str
    diagnostic: str
    metrics: dict[str, Any]
    trace: dict[str, np.ndarray]
    trace_csv: str = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def save_csv(self, path: str | os.PathLike[str]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.trace_csv)


def _overrides(overrides: Mapping[str, Any] | Iterable[str] | None) -> list[str]:
    if overrides is None:
        return []
    if isinstance(overrides, Mapping):
        return [f"{k}={json.dumps(v)}" for k, v in overrides.items()]
    return list(overrides)


def preset(name: str) -> dict[str, Any]:
    """Preset scenario as a config document."""
    return json.loads(_gfmdc.preset_json(name))


def load_config(path: str | os.PathLike[str]) -> dict[str, Any]:
    """Reads and validates a config file, returning the complete document."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    base = os.path.dirname(os.path.abspath(path))
    return json.loads(_gfmdc.normalize_json(text, [], base))


def run(config: Mapping[str, Any] | str, overrides=None, base_dir: str = "") -> RunResult:
    """Runs a scenario given as a config dict or JSON text."""
    text = config if isinstance(config, str) else json.dumps(config)
    raw = _gfmdc.run_json(text, _overrides(overrides), base_dir)
    return RunResult(
        status=raw["status"],
        diagnostic=raw["diagnostic"],
        metrics=json.loads(raw["metrics_json"]),
        trace=dict(raw["trace"]),
        trace_csv=raw["trace_csv"],
    )


def run_preset(name: str, overrides=None) -> RunResult:
    return run(_gfmdc.preset_json(name), overrides)


def compare(with_bess: RunResult | str, without_bess: RunResult | str) -> dict[str, Any]:
    """Deviation-reduction report for two runs (results or CSV text)."""
    a = with_bess.trace_csv if isinstance(with_bess, RunResult) else with_bess
    b = without_bess.trace_csv if isinstance(without_bess, RunResult) else without_bess
    return json.loads(_gfmdc.compare_csv(a, b))


def check_preset(name: str) -> list[tuple[str, bool, str]]:
    return _gfmdc.check_preset(name)
