"""`key = value` scenario files with dotted section keys and `#` comments."""

import copy
import logging
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import ValidationError

from ConeFlows.errors import InvalidConfigError
from ConeFlows.schemas import ScenarioConfig

LOGGER = logging.getLogger(__name__)
LOGGER.setLevel(logging.INFO)

# `sweep.grid = key=v1,v2;...` travels with a scenario but is not part of it
SWEEP_SECTION = "sweep"


def _assign(tree: dict, dotted_key: str, value: Any) -> None:
    *sections, leaf = dotted_key.split(".")
    node = tree
    for section in sections:
        node = node.setdefault(section, {})
        if not isinstance(node, dict):
            raise InvalidConfigError([f"{dotted_key}: '{section}' is a value, not a section"])
    node[leaf] = value


def parse_config_tree(text: str) -> dict:
    tree: dict = {}
    errors = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            errors.append(f"line {lineno}: expected 'key = value', got '{raw.strip()}'")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key '{key}'")
            continue
        seen.add(key)
        try:
            _assign(tree, key, value)
        except InvalidConfigError as exc:
            errors.extend(f"line {lineno}: {message}" for message in exc.errors)
    if errors:
        raise InvalidConfigError(errors)
    return tree


def build_config(tree: dict) -> ScenarioConfig:
    tree = {key: value for key, value in tree.items() if key != SWEEP_SECTION}
    try:
        return ScenarioConfig.model_validate(tree)
    except ValidationError as exc:
        raise InvalidConfigError(
            [f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()]
        ) from exc


def parse_config(text: str) -> ScenarioConfig:
    return build_config(parse_config_tree(text))


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    LOGGER.info("loading scenario config from %s", path)
    return parse_config(Path(path).read_text(encoding="utf-8"))


def with_overrides(tree: dict, overrides: dict[str, Any]) -> ScenarioConfig:
    tree = copy.deepcopy(tree)
    for key, value in overrides.items():
        _assign(tree, key, value)
    return build_config(tree)


def sweep_grid(tree: dict) -> Optional[str]:
    section = tree.get(SWEEP_SECTION, {})
    if not isinstance(section, dict) or set(section) - {"grid"}:
        raise InvalidConfigError([f"{SWEEP_SECTION}: only '{SWEEP_SECTION}.grid' is recognised"])
    return section.get("grid")
