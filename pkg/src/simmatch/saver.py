"""
Writes experiment configs as yaml, toml or json; shared format tables.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import json
from pathlib import Path
from typing import TYPE_CHECKING, Any

import toml
import yaml

if TYPE_CHECKING:
    from ._typing import ConfigFileFormat


__all__ = ["SUFFIX_MAPPING", "FORMAT_MAPPING", "FileFormatError"]


SUFFIX_MAPPING = {
    ".yaml": "yaml",
    ".yml": "yaml",
    ".toml": "toml",
    ".json": "json",
}
FORMAT_MAPPING = {
    "yaml": "yaml",
    "yml": "yaml",
    "toml": "toml",
    "json": "json",
}


class ConfigSaver:
    """Mixin that writes `self.unwrap()` to yaml, toml or json files."""

    def unwrap(self) -> dict[str, Any]:
        """Returns the config as plain builtin objects."""
        raise NotImplementedError()

    def as_toml_dict(self) -> dict[str, Any]:
        """
        Returns `self.unwrap()` without null values, which toml cannot
        represent; readers treat a missing key as null.

        """
        return _drop_none(self.unwrap())

    def to_yaml(self, path: str | Path, /, encoding: str | None = None) -> None:
        """Write the config as yaml, keeping field order."""
        with open(path, "w", encoding=encoding) as f:
            yaml.safe_dump(self.unwrap(), f, sort_keys=False)

    def to_json(self, path: str | Path, /, encoding: str | None = None) -> None:
        """Write the config as indented json."""
        with open(path, "w", encoding=encoding) as f:
            json.dump(self.unwrap(), f, indent=2)

    def to_toml(self, path: str | Path, /, encoding: str | None = None) -> None:
        """Write the config as toml, omitting null fields."""
        with open(path, "w", encoding=encoding) as f:
            toml.dump(self.as_toml_dict(), f)

    def save(
        self,
        path: str | Path,
        fileformat: "ConfigFileFormat | None" = None,
        /,
        encoding: str | None = "utf-8",
    ) -> None:
        """
        Write the config to `path`.

        Parameters
        ----------
        path : str | Path
            File path.
        fileformat : ConfigFileFormat | None, optional
            File format, by default None. If not specified, the format is
            chosen by the file suffix, falling back to yaml.
        encoding : str | None, optional
            The name of the encoding used to encode the file, by default
            "utf-8".

        Raises
        ------
        FileFormatError
            Raised if the format is not supported.

        """
        if fileformat is None:
            fileformat = SUFFIX_MAPPING.get(Path(path).suffix, "yaml")
        match FORMAT_MAPPING.get(fileformat):
            case "yaml":
                self.to_yaml(path, encoding=encoding)
            case "toml":
                self.to_toml(path, encoding=encoding)
            case "json":
                self.to_json(path, encoding=encoding)
            case _:
                raise FileFormatError(f"unsupported config file format: {fileformat!r}")


def _drop_none(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_drop_none(x) for x in obj]
    return obj


class FileFormatError(Exception):
    """Unknown config file format, or a document that is not a mapping."""
