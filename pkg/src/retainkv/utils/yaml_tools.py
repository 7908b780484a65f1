"""Loading and dumping pydantic models as YAML or JSON documents."""

import json
from pathlib import Path
from typing import Any, TypeVar

import yaml
from loguru import logger
from pydantic import BaseModel, ValidationError

from retainkv.exceptions import ConfigError, DataError

T = TypeVar("T", bound="YAMLMixin")


def read_document(path: str | Path) -> Any:
    """Parse a ``.json``, ``.yaml`` or ``.yml`` file.

    Raises:
        DataError: If the file is missing or does not parse.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path} does not exist")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise DataError(f"{path} does not parse: {e}") from e


class YAMLMixin:
    """Serialization helpers for pydantic models; validation failures become ConfigError."""

    def to_yaml(self: BaseModel, file_path: str | Path | None = None) -> str:  # type: ignore[misc]
        content = yaml.safe_dump(self.model_dump(mode="json"), default_flow_style=False, sort_keys=True, width=1000)
        if file_path:
            Path(file_path).write_text(content)
            logger.info(f"Wrote {file_path}")
        return content

    def to_json(self: BaseModel, file_path: str | Path | None = None) -> str:  # type: ignore[misc]
        content = json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)
        if file_path:
            Path(file_path).write_text(content + "\n")
            logger.info(f"Wrote {file_path}")
        return content

    @classmethod
    def from_dict(cls: type[T], data: dict[str, Any]) -> T:
        try:
            return cls.model_validate(data)  # type: ignore[attr-defined]
        except ValidationError as e:
            raise ConfigError(f"invalid {cls.__name__}: {_first_error(e)}") from e

    @classmethod
    def from_file(cls: type[T], file_path: str | Path) -> T:
        data = read_document(file_path)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{file_path} must hold a mapping")
        return cls.from_dict(data)


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    return f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
