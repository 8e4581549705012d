"""Flat sectioned key/value configuration files.

Either dotted keys or ``[section]`` headers are accepted::

    slopes.alpha = [0, 2, 4]
    [hardware]
    P_FIX = 5.0

Values are Python literals (numbers, lists, booleans, also lowercase
``true``/``false``); anything else is kept as a bare string. ``#`` starts a comment.
"""

from __future__ import annotations

import ast
import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from .pathloss import DEFAULT_LOSS_DB_AT_1KM, LITERAL, PathLossModel
from .power import SystemConfig, db_to_linear

SECTIONS = ("slopes", "hardware", "radio", "experiment")

_HARDWARE_KEYS = ("P_FIX", "P_LO", "P_BS", "P_UE", "P_COD", "P_DEC", "P_BT", "L_BS", "eta")
# radio keys given in dB are converted; the rest map 1:1 onto SystemConfig
_RADIO_DB_KEYS = {"sigma2_dbm": "sigma2", "SNR0_db": "SNR0", "SNRp_db": "SNRp"}
_RADIO_KEYS = ("tau_c", "B_w", "xi", "sigma2", "SNR0", "SNRp", "area", "tx_pilot_boost")


class ConfigError(ValueError):
    pass


_BOOLS = {"true": True, "false": False, "yes": True, "no": False}


def _parse_value(text: str):
    if text.lower() in _BOOLS:
        return _BOOLS[text.lower()]
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config_text(text: str) -> dict[str, dict[str, object]]:
    out: dict[str, dict[str, object]] = {s: {} for s in SECTIONS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in out:
                raise ConfigError(f"line {lineno}: unknown section {section!r}")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." in key and key.split(".", 1)[0] in out:
            sec, key = key.split(".", 1)
        elif section is not None:
            sec = section
        else:
            raise ConfigError(f"line {lineno}: key {key!r} has no section")
        out[sec][key] = _parse_value(value)
    return out


@dataclass(frozen=True)
class LoadedConfig:
    model: PathLossModel
    system: SystemConfig
    experiment: dict = field(default_factory=dict)
    source_text: str = ""

    @property
    def fingerprint(self) -> str:
        key = "|".join((self.model.fingerprint, self.system.fingerprint, repr(sorted(self.experiment.items()))))
        return hashlib.sha256(key.encode()).hexdigest()[:16]


def build_model(slopes: dict) -> PathLossModel:
    unknown = set(slopes) - {"alpha", "breakpoints_m", "intercept_db_at_1km", "mode"}
    if unknown:
        raise ConfigError(f"unknown slopes keys: {sorted(unknown)}")
    if not slopes:
        return PathLossModel.default()
    alpha = slopes.get("alpha", (0, 2, 4))
    breaks = slopes.get("breakpoints_m", (10, 446) if "alpha" not in slopes else ())
    return PathLossModel.from_spec(
        alpha,
        breaks,
        float(slopes.get("intercept_db_at_1km", DEFAULT_LOSS_DB_AT_1KM)),
        str(slopes.get("mode", LITERAL)),
    )


def build_system(hardware: dict, radio: dict) -> SystemConfig:
    kwargs = {}
    for key, value in hardware.items():
        if key not in _HARDWARE_KEYS:
            raise ConfigError(f"unknown hardware key {key!r}")
        kwargs[key] = float(value)
    for key, value in radio.items():
        if key in _RADIO_DB_KEYS:
            linear = db_to_linear(float(value))
            kwargs[_RADIO_DB_KEYS[key]] = linear * 1e-3 if key == "sigma2_dbm" else linear
        elif key == "tx_pilot_boost":
            if not isinstance(value, bool):
                raise ConfigError(f"tx_pilot_boost must be true or false, got {value!r}")
            kwargs[key] = value
        elif key in _RADIO_KEYS:
            kwargs[key] = value if key == "tau_c" else float(value)
        else:
            raise ConfigError(f"unknown radio key {key!r}")
    valid = {f.name for f in fields(SystemConfig)}
    assert set(kwargs) <= valid
    return SystemConfig(**kwargs)


def load_config_text(text: str) -> LoadedConfig:
    sections = parse_config_text(text)
    return LoadedConfig(
        build_model(sections["slopes"]),
        build_system(sections["hardware"], sections["radio"]),
        dict(sections["experiment"]),
        text,
    )


def load_config(path: str | Path | None) -> LoadedConfig:
    if path is None:
        return load_config_text("")
    return load_config_text(Path(path).read_text())
