import copy
import tomllib

from pathlib import Path
from pydantic import BaseModel, ValidationError
from typing import Any, Mapping

from .models import ExperimentConfig
from .. import PACKAGE_DIR
from ..utils.errors import ConfigError

PRESET_FOLDER = PACKAGE_DIR / "configs" / "data"
DEFAULT_CONFIG_FILE = PACKAGE_DIR.parent / "config.toml"


def parse_config_file(path: Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)

    except FileNotFoundError:
        return {}

    except tomllib.TOMLDecodeError as err:
        raise ConfigError(str(path), f"not valid TOML ({err})") from err


def available_presets() -> list[str]:
    return sorted(path.stem for path in PRESET_FOLDER.glob("*.toml"))


def read_preset(name: str) -> dict[str, Any]:
    if name not in available_presets():
        raise ConfigError("preset", f"unknown preset {name!r}, available: {', '.join(available_presets())}")

    return parse_config_file(PRESET_FOLDER / f"{name}.toml")


def config_keys(model: type[BaseModel] = ExperimentConfig, prefix: str = "") -> list[str]:
    keys = []
    for name, info in model.model_fields.items():
        annotation = info.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            keys.extend(config_keys(annotation, f"{prefix}{name}."))
        else:
            keys.append(f"{prefix}{name}")

    return keys


def parse_flag_value(raw: str) -> Any:
    """Flags are typed like TOML values (`3`, `1e-5`, `[2, 3]`); anything else stays a plain string."""

    try:
        return tomllib.loads(f"value = {raw}")["value"]

    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(config_dict: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(dict(config_dict))
    for dotted_key, value in overrides.items():
        *sections, key = dotted_key.split(".")
        node = merged
        for section in sections:
            child = node.setdefault(section, {})
            if not isinstance(child, dict):
                raise ConfigError(dotted_key, f"{section} is not a section")

            node = child

        node[key] = value

    return merged


def merge_configs(base: Mapping[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = merge_configs(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)

    return merged


def validate_config(config_dict: Mapping[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(config_dict)

    except ValidationError as err:
        first = err.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(key, first["msg"]) from err


def read_experiment_config(
    path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    preset: str | None = None,
) -> ExperimentConfig:
    config_dict = read_preset(preset) if preset is not None else {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(str(path), "config file not found")

        config_dict = merge_configs(config_dict, parse_config_file(path))

    return validate_config(apply_overrides(config_dict, overrides or {}))


def with_overrides(cfg: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    return validate_config(apply_overrides(cfg.model_dump(mode="json", exclude_none=True), overrides))
