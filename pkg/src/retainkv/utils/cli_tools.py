"""Shared plumbing for the command modules: error reporting and option parsing."""

import functools
import json
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import icontract
import typer
from loguru import logger
from pydantic import ValidationError

from retainkv.backbone import ModelConfig
from retainkv.exceptions import ConfigError, ContractViolation, DataError, RetainKVError
from retainkv.retaining import HeadSet, load_headset

F = TypeVar("F", bound=Callable[..., Any])


def configure_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "WARNING")


def _fail(kind: str, message: str, code: int) -> typer.Exit:
    logger.debug(f"Exiting with {code}: {kind}")
    typer.echo(json.dumps({"error": kind, "message": message, "exit_code": code}), err=True)
    return typer.Exit(code)


def cli_errors(fn: F) -> F:
    """Turn library errors into one JSON line on stderr and the matching exit code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except typer.Exit:
            raise
        except RetainKVError as e:
            raise _fail(e.kind, str(e), e.exit_code) from e
        except ValidationError as e:
            raise _fail(ConfigError.kind, str(e).splitlines()[0], ConfigError.exit_code) from e
        except json.JSONDecodeError as e:
            raise _fail(DataError.kind, str(e), DataError.exit_code) from e
        except icontract.ViolationError as e:
            raise _fail(ContractViolation.kind, str(e).splitlines()[0], ContractViolation.exit_code) from e
        except OSError as e:
            raise _fail(DataError.kind, str(e), DataError.exit_code) from e
        except Exception as e:
            logger.exception("Unexpected failure")
            raise _fail(RetainKVError.kind, f"{type(e).__name__}: {e}", RetainKVError.exit_code) from e

    return wrapper  # type: ignore[return-value]


def parse_int_list(text: str) -> list[int]:
    """``"0,32,128"`` -> ``[0, 32, 128]``."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from e


def emit(payload: Any) -> None:
    typer.echo(json.dumps(payload, sort_keys=True, default=str))


# Lets commands receive ``--section.key value`` overrides through ``ctx.args``.
OVERRIDE_CONTEXT = {"allow_extra_args": True, "ignore_unknown_options": True}


def load_optional_headset(path: Path | None, cfg: ModelConfig) -> HeadSet | None:
    return None if path is None else load_headset(path, cfg)
