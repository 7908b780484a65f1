import json
from pathlib import Path

from retainkv.exceptions import DataError


def read_tokens(path: str | Path) -> list[int]:
    """Token files are JSON arrays of integer ids."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"token file {path} does not exist")
    try:
        tokens = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"token file {path} is not JSON: {e}") from e
    if not isinstance(tokens, list) or not all(isinstance(t, int) and not isinstance(t, bool) for t in tokens):
        raise DataError(f"token file {path} must hold a JSON array of integers")
    return tokens


def write_tokens(path: str | Path, tokens: list[int]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([int(t) for t in tokens]) + "\n")
    return path


def out_dir(base: str | Path, name: str = "") -> Path:
    path = Path(base) / name if name else Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path
