"""
Loads experiment config documents from yaml, toml or json files.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import json
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, NamedTuple, TextIO

import toml
import yaml
from yaml import MarkedYAMLError
from yaml.reader import ReaderError

from .saver import FORMAT_MAPPING, SUFFIX_MAPPING, FileFormatError

if TYPE_CHECKING:
    from ._typing import ConfigFileFormat

__all__ = ["detect_encoding", "read_yaml", "read_json", "read_toml", "read_document"]


class _Loader(NamedTuple):
    load: Callable[[TextIO], Any]
    errors: tuple[type[Exception], ...]


# Order matters: autodetection tries the strictest syntax first.
_LOADERS: dict[str, _Loader] = {
    "json": _Loader(json.load, (json.JSONDecodeError,)),
    "toml": _Loader(toml.load, (toml.decoder.TomlDecodeError,)),
    "yaml": _Loader(yaml.safe_load, (ReaderError, MarkedYAMLError)),
}


def detect_encoding(path: str | Path) -> str:
    """
    Guess the text encoding of a config file from its first line.

    Parameters
    ----------
    path : str | Path
        File path.

    Returns
    -------
    str
        Encoding name, e.g. ``"utf-8"`` or ``"utf-16"``.

    """
    with open(path, "rb") as f:
        return json.detect_encoding(f.readline())


def _load(fmt: str, path: str | Path, encoding: str | None) -> Any:
    with open(path, "r", encoding=encoding or detect_encoding(path)) as f:
        return _LOADERS[fmt].load(f)


def read_yaml(path: str | Path, /, encoding: str | None = None) -> Any:
    """Parse a yaml file (safe loader)."""
    return _load("yaml", path, encoding)


def read_json(path: str | Path, /, encoding: str | None = None) -> Any:
    """Parse a json file."""
    return _load("json", path, encoding)


def read_toml(path: str | Path, /, encoding: str | None = None) -> Any:
    """Parse a toml file."""
    return _load("toml", path, encoding)


def read_document(
    path: str | Path,
    fileformat: "ConfigFileFormat | None" = None,
    /,
    encoding: str | None = None,
) -> dict[str, Any]:
    """
    Load a config file as a plain mapping.

    The format is taken from `fileformat` if given, else from the file
    suffix; a file with an unknown suffix is parsed by each loader in
    turn until one yields a mapping.

    Parameters
    ----------
    path : str | Path
        File path.
    fileformat : ConfigFileFormat | None, optional
        One of ``"yaml"``, ``"yml"``, ``"toml"`` or ``"json"``, by default
        None.
    encoding : str | None, optional
        Text encoding, by default None (guessed from the first line).

    Returns
    -------
    dict[str, Any]
        The top-level table of the document.

    Raises
    ------
    FileFormatError
        The format is unknown, or the document is not a mapping.

    """
    encoding = encoding or detect_encoding(path)
    fmt = fileformat or SUFFIX_MAPPING.get(Path(path).suffix)
    if fmt is None:
        return ConfigReader.autoread(path, encoding=encoding)
    if fmt not in FORMAT_MAPPING:
        raise FileFormatError(f"unsupported config file format: {fmt!r}")
    document = _load(FORMAT_MAPPING[fmt], path, encoding)
    if not isinstance(document, dict):
        raise FileFormatError(f"config file does not hold a mapping: '{path}'")
    return document


class ConfigReader:
    """Format sniffing for config files without a known suffix."""

    @staticmethod
    def autoread(path: str | Path, /, encoding: str | None = None) -> dict[str, Any]:
        """
        Return the first mapping produced by the json, toml and yaml
        loaders, in that order.

        Raises
        ------
        FileFormatError
            No loader produced a mapping.

        """
        for fmt, loader in _LOADERS.items():
            try:
                document = _load(fmt, path, encoding)
            except loader.errors:
                continue
            if isinstance(document, dict):
                return document
        raise FileFormatError(f"failed to read the config file: '{path}'")
