import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from trunclab.exceptions import TrunclabConfigException

ENV_PREFIX = "TRUNCLAB_"

COMMANDS = ("scan", "delta", "round", "construct", "realize", "constants", "rho", "verify")

DEFAULTS = {
    "threads": 1,
    "seed": 0,
    "budget_mem": 1 << 22,
    "node_budget": 10_000_000,
    "candidate_budget": 1_000_000,
    "brute_max_primes": 28,
    "ternary_budget": 3 ** 13,
    "segment_size": 1 << 20,
    "sample_every": 1_000_000,
    "flush_every": 100_000_000,
    "out_dir": ".",
    "log_level": "WARNING",
}

INT_SETTINGS = (
    "threads",
    "seed",
    "budget_mem",
    "node_budget",
    "candidate_budget",
    "brute_max_primes",
    "ternary_budget",
    "segment_size",
    "sample_every",
    "flush_every",
)

POSITIVE_SETTINGS = tuple(name for name in INT_SETTINGS if name != "seed")

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Everything a single run of the lab needs; seed fixed means the run is reproducible"""

    command: str
    threads: int = DEFAULTS["threads"]
    seed: int = DEFAULTS["seed"]
    budget_mem: int = DEFAULTS["budget_mem"]
    node_budget: int = DEFAULTS["node_budget"]
    candidate_budget: int = DEFAULTS["candidate_budget"]
    brute_max_primes: int = DEFAULTS["brute_max_primes"]
    ternary_budget: int = DEFAULTS["ternary_budget"]
    segment_size: int = DEFAULTS["segment_size"]
    sample_every: int = DEFAULTS["sample_every"]
    flush_every: int = DEFAULTS["flush_every"]
    out_dir: str = DEFAULTS["out_dir"]
    log_level: str = DEFAULTS["log_level"]
    args: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_sources(cls, command, overrides: Optional[Dict[str, Any]] = None, args=None, environ=None):
        """Build a config with precedence defaults < TRUNCLAB_* environment < explicit overrides"""
        settings = dict(DEFAULTS)
        settings.update(read_environment(environ))
        for key, value in (overrides or {}).items():
            if value is not None:
                settings[key] = value

        config = cls(command=command, args=dict(args or {}), **settings)
        config.validate()
        return config

    def validate(self):
        if self.command not in COMMANDS:
            raise TrunclabConfigException(f"Unknown command '{self.command}'; expected one of {', '.join(COMMANDS)}")

        for name in POSITIVE_SETTINGS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise TrunclabConfigException(f"Setting '{name}' must be a positive integer (got {value!r}); "
                                              f"pass --{name.replace('_', '-')} or set {ENV_PREFIX}{name.upper()}")

        if self.segment_size > self.budget_mem:
            raise TrunclabConfigException(f"Segment size {self.segment_size} exceeds the memory budget {self.budget_mem}; "
                                          "lower --segment-size or raise --budget-mem")

        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise TrunclabConfigException(f"Invalid log level '{self.log_level}'")

        return self

    def settings(self):
        """The global settings only (no command arguments), for provenance in artifacts"""
        return {name: getattr(self, name) for name in DEFAULTS}


def read_environment(environ=None):
    environ = os.environ if environ is None else environ
    settings = {}
    for name in DEFAULTS:
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            continue

        if name in INT_SETTINGS:
            try:
                settings[name] = int(raw.replace("_", ""))
            except ValueError:
                raise TrunclabConfigException(f"Environment variable {ENV_PREFIX}{name.upper()} must be an integer (got '{raw}')")
        else:
            settings[name] = raw

        logger.debug(f"Setting {name} taken from environment")

    return settings
