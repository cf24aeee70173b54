"""TOML run configuration: parsing, validation and echo.

Powers are given in dBm and antenna gain in dB; both are converted to
linear units once, here.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError
from .geometry import LayoutParams, RisPanel, Scenario, aggregate_gain, build_layout
from .harness import ExperimentConfig
from .precoding import LinkBudget, db_to_linear, uniform_power
from .rates import waterfill_allocation

_NUM = (int, float)

# section -> key -> (types, required)
SCHEMA = {
    "layout": {
        "D_B": (_NUM, True), "D": (_NUM, True), "D_u": (_NUM, True), "L": (_NUM, True),
        "bs_height": (_NUM, True), "ris_height": (_NUM, True), "K": (int, True),
        "user_seed": (int, True),
    },
    "panel": {
        "N": ((int, list), False), "N_logspace": (list, False),
        "a": (_NUM, True), "b": (_NUM, True), "gamma": (_NUM, True),
        "phase": (str, False), "phase_seed": (int, False),
    },
    "budget": {
        "P_dBm": (_NUM, True), "noise_dBm": (_NUM, True), "allocation": (str, False),
    },
    "system": {"M": (int, True), "f_GHz": (_NUM, True), "A_dB": (_NUM, True)},
    "experiment": {
        "trials": (int, True), "root_seed": (int, True), "synthesis": (str, False),
        "fading": (str, False), "paired": (bool, False),
    },
}

CHOICES = {
    ("panel", "phase"): ("zero", "random"),
    ("budget", "allocation"): ("uniform", "waterfill"),
    ("experiment", "synthesis"): ("clt", "exact"),
    ("experiment", "fading"): ("complex-gaussian", "uniform-phase-unit-modulus", "real-bernoulli-pm1"),
}


def _check(doc: dict) -> None:
    for section in doc:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    for section, keys in SCHEMA.items():
        body = doc.get(section)
        if not isinstance(body, dict):
            raise ConfigError(f"missing section [{section}]")
        for key in body:
            if key not in keys:
                raise ConfigError(f"[{section}] unknown key {key!r}")
        for key, (types, required) in keys.items():
            if key not in body:
                if required:
                    raise ConfigError(f"[{section}] missing required key {key!r}")
                continue
            val = body[key]
            if isinstance(val, bool) and types is not bool:
                raise ConfigError(f"[{section}] {key}: expected a number, got a boolean")
            if not isinstance(val, types):
                raise ConfigError(f"[{section}] {key}: unexpected value {val!r}")
            choices = CHOICES.get((section, key))
            if choices and val not in choices:
                raise ConfigError(f"[{section}] {key}: {val!r} is not one of {choices}")
    panel = doc["panel"]
    if ("N" in panel) == ("N_logspace" in panel):
        raise ConfigError("[panel] give exactly one of 'N' or 'N_logspace'")
    if "N_logspace" in panel:
        spec = panel["N_logspace"]
        if len(spec) != 3 or not all(isinstance(x, _NUM) for x in spec) or int(spec[2]) < 1:
            raise ConfigError("[panel] N_logspace must be [log10_start, log10_stop, count]")
    else:
        ns = panel["N"] if isinstance(panel["N"], list) else [panel["N"]]
        if not ns or not all(isinstance(n, int) and n >= 1 for n in ns):
            raise ConfigError("[panel] N must be a positive integer or a list of them")
    if doc["experiment"]["trials"] < 1:
        raise ConfigError("[experiment] trials must be at least 1")
    if doc["system"]["M"] < doc["layout"]["K"]:
        raise ConfigError(f"[system] M={doc['system']['M']} is smaller than K={doc['layout']['K']}")
    if not 0 <= panel["gamma"] <= 1:
        raise ConfigError("[panel] gamma must lie in [0, 1]")


@dataclass(eq=False)
class RunConfig:
    doc: dict

    def __post_init__(self):
        _check(self.doc)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.doc == other.doc

    # ---- construction
    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            doc = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls(doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text)

    @classmethod
    def default(cls) -> "RunConfig":
        text = resources.files("risdim").joinpath("data/reference.toml").read_text(encoding="utf-8")
        return cls.loads(text)

    def dumps(self) -> str:
        return tomli_w.dumps(self.doc)

    def updated(self, section: str, **values) -> "RunConfig":
        doc = copy.deepcopy(self.doc)
        doc[section].update(values)
        if section == "panel" and "N" in values:
            doc["panel"].pop("N_logspace", None)
        return RunConfig(doc)

    # ---- domain objects
    def layout(self) -> LayoutParams:
        s = self.doc["layout"]
        return LayoutParams(
            bs_ris_distance=float(s["D_B"]), bs_area_distance=float(s["D"]),
            ris_area_gap=float(s["D_u"]), area_side=float(s["L"]),
            bs_height=float(s["bs_height"]), ris_height=float(s["ris_height"]),
            num_users=s["K"], user_seed=s["user_seed"],
        )

    @property
    def num_users(self) -> int:
        return self.doc["layout"]["K"]

    def scenario(self, num_antennas: Optional[int] = None) -> Scenario:
        sysd = self.doc["system"]
        m = sysd["M"] if num_antennas is None else int(num_antennas)
        return build_layout(self.layout(), sysd["f_GHz"] * 1e9, db_to_linear(sysd["A_dB"]), m)

    def n_grid(self) -> list[int]:
        p = self.doc["panel"]
        if "N" in p:
            return list(p["N"]) if isinstance(p["N"], list) else [p["N"]]
        start, stop, count = p["N_logspace"]
        vals = np.rint(np.logspace(start, stop, int(count))).astype(np.int64)
        return sorted({int(v) for v in vals})

    def panel(self, num_elements: Optional[int] = None) -> RisPanel:
        p = self.doc["panel"]
        n = self.n_grid()[0] if num_elements is None else num_elements
        return RisPanel(
            num_elements=n, element_width=float(p["a"]), element_height=float(p["b"]),
            reflection_amplitude=float(p["gamma"]), phase_mode=p.get("phase", "zero"),
            phase_seed=p.get("phase_seed", 0),
        )

    @property
    def allocation_mode(self) -> str:
        return self.doc["budget"].get("allocation", "uniform")

    def budget(self, scenario: Optional[Scenario] = None, panel: Optional[RisPanel] = None) -> LinkBudget:
        """Link budget; water-filling needs the scenario and panel it is computed for."""
        base = self.uniform_budget()
        k = self.num_users
        if self.allocation_mode == "uniform":
            return base
        if scenario is None or panel is None:
            raise ConfigError("water-filling allocation needs a scenario and panel")
        if scenario.num_antennas <= k:
            raise ConfigError("[budget] water-filling needs M > K")
        gains = aggregate_gain(scenario, panel, method="square")
        return base.with_allocation(
            waterfill_allocation(gains, base, scenario.num_antennas, k, panel.reflection_amplitude))

    def uniform_budget(self) -> LinkBudget:
        b = self.doc["budget"]
        return LinkBudget.from_dbm(b["P_dBm"], b["noise_dBm"], uniform_power(self.num_users))

    def experiment(self, trials: Optional[int] = None, seed: Optional[int] = None) -> ExperimentConfig:
        e = self.doc["experiment"]
        return ExperimentConfig(
            trials=e["trials"] if trials is None else trials,
            root_seed=e["root_seed"] if seed is None else seed,
            sweep_variable="N",
            sweep_grid=tuple(self.n_grid()),
            outputs=("rates",),
            paired=e.get("paired", True),
            synthesis=e.get("synthesis", "clt"),
            fading=e.get("fading", "complex-gaussian"),
            allocation=self.allocation_mode,
        )
