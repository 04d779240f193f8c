__all__ = ["load_document", "read_configuration_file"]

import json
import tomllib
from copy import deepcopy
from functools import cache
from logging import getLogger
from pathlib import Path
from typing import cast

from toolkit.exceptions import ConfigurationError

LOGGER = getLogger(__name__)


@cache
def _load_cached(path: Path, mtime_ns: int) -> dict:
    match path.suffix.lower():
        case ".toml":
            document = tomllib.loads(path.read_text())
        case ".json" | "":
            try:
                document = json.loads(path.read_text())
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
        case other:
            raise ConfigurationError(f"{path}: unsupported configuration format '{other}', use .json or .toml")
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path}: the configuration document must be an object of sections")
    LOGGER.info("Loaded configuration file: %s", path.absolute())
    return cast(dict, document)


def load_document(path: Path | str) -> dict:
    """
    Read a whole configuration document. The format is chosen by suffix: `.toml` is TOML, anything else is JSON.
    """
    f = Path(path)
    if not f.is_file():
        raise ConfigurationError(f"Configuration file {f} does not exist")
    return deepcopy(_load_cached(f, f.stat().st_mtime_ns))


def read_configuration_file(*potential_paths: Path | str, section: str, missing_ok: bool = False) -> dict:
    """
    Reads a configuration from the list of potential paths. The first one found is the one which is read.
    Therefore, the ordering of the arguments will matter.

    missing_ok: returns an empty dictionary if it fails to find any files or the relevant section.
    """
    result = {}
    for p in potential_paths:
        if (f := Path(p)).exists():
            result = load_document(f)
            break
    if missing_ok:
        return cast(dict, result.get(section, {}))
    else:
        try:
            return cast(dict, result[section])
        except KeyError as k:
            if any(Path(p).exists() for p in potential_paths):
                raise KeyError(f"section '{section}' is not found in first-found configuration") from k
            else:
                raise FileNotFoundError(
                    f"Could not find configuration file. Searched: '{','.join(str(p) for p in potential_paths)}'",
                ) from k
