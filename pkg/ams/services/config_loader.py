"""
Flat dotted-key configuration files.

    # comment
    sampler.kind = ams
    policy.gamma = 0.035
    compare.samplers = uniform,ams

Overrides use the same `key=value` syntax and are applied after the file.
"""

import logging
import os
from dataclasses import fields
from typing import Any, Iterable, List, Optional, Tuple

from ams.exceptions import ConfigError
from ams.models.experiment_models import ExperimentConfig
from ams.services.file_manager import FileManager
from ams.utils.validation import validate_seed_range

logger = logging.getLogger(__name__)

CONFIG_FILENAME = "config.cfg"
DEFAULT_OUT_DIR = "runs"
TRUE_WORDS = ('true', '1', 'yes', 'on')
FALSE_WORDS = ('false', '0', 'no', 'off')


def _split_line(line: str, where: str) -> Tuple[str, str]:
    if '=' not in line:
        raise ConfigError(f"expected 'key = value' ({where})")
    key, value = line.split('=', 1)
    return key.strip(), value.strip()


def _convert(key: str, current: Any, raw: str) -> Any:
    """Convert raw text to the type of the field's current value."""
    try:
        if isinstance(current, bool):
            word = raw.lower()
            if word in TRUE_WORDS:
                return True
            if word in FALSE_WORDS:
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, list):
            return [part.strip() for part in raw.split(',') if part.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"cannot read '{raw}' as {type(current).__name__}", key=key) from None


def set_value(cfg: ExperimentConfig, key: str, raw: str) -> None:
    """
    Assign one dotted key from its text value.

    Raises:
        ConfigError: Unknown key or type mismatch, naming the key
    """
    section_name, _, name = key.partition('.')
    if section_name not in ExperimentConfig.SECTIONS or not name:
        raise ConfigError("unknown config key", key=key)
    section = getattr(cfg, section_name)
    if name not in {f.name for f in fields(section)}:
        raise ConfigError("unknown config key", key=key)
    setattr(section, name, _convert(key, getattr(section, name), raw))


def parse_config_text(text: str, cfg: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply every `key = value` line of text on top of cfg (defaults if None)."""
    cfg = cfg or ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        key, value = _split_line(line, f"line {lineno}")
        set_value(cfg, key, value)
    return cfg


def apply_overrides(cfg: ExperimentConfig, overrides: Iterable[str]) -> ExperimentConfig:
    for item in overrides:
        key, value = _split_line(item, f"override '{item}'")
        set_value(cfg, key, value)
    return cfg


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """
    Read a config file (defaults when path is None), apply overrides, validate.

    Raises:
        FileNotFoundError: If path does not exist
        ConfigError: Unknown key, type mismatch or invalid value
    """
    cfg = ExperimentConfig()
    if path:
        cfg = parse_config_text(FileManager.load_text(path), cfg)
    cfg = apply_overrides(cfg, overrides)
    cfg.validate()
    return cfg


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ','.join(str(v) for v in value)
    return str(value)


def write_config(cfg: ExperimentConfig) -> str:
    """Every key of cfg as `key = value` lines; parses back to an equal config."""
    lines: List[str] = []
    for section_name in ExperimentConfig.SECTIONS:
        section = getattr(cfg, section_name)
        for f in fields(section):
            lines.append(f"{section_name}.{f.name} = {_render(getattr(section, f.name))}")
    return '\n'.join(lines) + '\n'


def parse_seeds(text: str) -> List[int]:
    """'N' -> [N]; 'N..M' -> [N, ..., M]."""
    is_valid, msg = validate_seed_range(text.strip())
    if not is_valid:
        raise ConfigError(msg, key='run.seeds')
    bounds = [int(part) for part in text.strip().split('..')]
    return list(range(bounds[0], bounds[-1] + 1))


def resolve_out_dir(cfg: ExperimentConfig) -> str:
    """run.out_dir, else $AMS_OUT_DIR, else ./runs."""
    return cfg.run.out_dir or os.environ.get('AMS_OUT_DIR') or DEFAULT_OUT_DIR
