from retainkv.config.run_config import (
    InitConfig,
    IOConfig,
    RunConfig,
    apply_overrides,
    load_run_config,
    parse_overrides,
)

__all__ = ["IOConfig", "InitConfig", "RunConfig", "apply_overrides", "load_run_config", "parse_overrides"]
