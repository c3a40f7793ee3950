from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass(frozen=True)
class Config:
    """Holds runtime configuration for gerrygrid commands."""

    threads: int
    output_dir: Path
    seed: int = 0
    log_level: str = "INFO"
    batch_size: int = 2048
    chain_burn_in: int = 1000
    chain_thinning: int = 10
    debug_chain: bool = False

    @staticmethod
    def load() -> "Config":
        load_dotenv()

        threads = _int_env("GERRYGRID_THREADS", default=os.cpu_count() or 1, minimum=1, maximum=256)
        output_dir = Path(os.getenv("GERRYGRID_OUTPUT_DIR", "./output")).expanduser()
        seed = _int_env("GERRYGRID_SEED", default=0, minimum=0)

        log_level = os.getenv("GERRYGRID_LOG_LEVEL", "INFO").strip().upper()
        if log_level not in LOG_LEVELS:
            raise ValueError(f"GERRYGRID_LOG_LEVEL must be one of {', '.join(sorted(LOG_LEVELS))}.")

        batch_size = _int_env("GERRYGRID_BATCH_SIZE", default=2048, minimum=1, maximum=1 << 20)
        chain_burn_in = _int_env("GERRYGRID_CHAIN_BURN_IN", default=1000, minimum=0)
        chain_thinning = _int_env("GERRYGRID_CHAIN_THIN", default=10, minimum=1)
        debug_chain = _bool_env("GERRYGRID_DEBUG_CHAIN", default=False)

        return Config(
            threads=threads,
            output_dir=output_dir,
            seed=seed,
            log_level=log_level,
            batch_size=batch_size,
            chain_burn_in=chain_burn_in,
            chain_thinning=chain_thinning,
            debug_chain=debug_chain,
        )


def _int_env(name: str, default: int, minimum: int | None = None, maximum: int | None = None) -> int:
    raw = os.getenv(name, "").strip()
    try:
        value = int(raw) if raw else default
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}.") from exc

    low = minimum if minimum is not None else value
    high = maximum if maximum is not None else value
    if not low <= value <= high:
        bounds = f"[{'' if minimum is None else minimum}, {'' if maximum is None else maximum}]"
        raise ValueError(f"{name}={value} is outside {bounds}.")
    return value


_TRUE = frozenset({"1", "true", "yes", "on"})
_FALSE = frozenset({"0", "false", "no", "off"})


def _bool_env(name: str, default: bool) -> bool:
    raw = os.getenv(name, "").strip().lower()
    if not raw:
        return default
    if raw in _TRUE:
        return True
    if raw in _FALSE:
        return False
    raise ValueError(f"{name} must be one of {', '.join(sorted(_TRUE | _FALSE))}.")
