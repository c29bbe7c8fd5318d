"""Analysis configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass
class AnalysisConfig:
    entry_globs: list = field(default_factory=list)
    include_path: list = field(default_factory=lambda: ["."])
    cwd: Optional[str] = None             # None: directory of each entry file
    max_loop_iterations: int = 256
    max_call_depth: int = 64
    branch_split_budget: int = 1024
    max_steps: int = 5_000_000            # oplines per entry before AnalysisError
    rules_file: Optional[str] = None
    output_format: str = "json"
    dump_opcodes: bool = False
    dump_cfg: bool = False
    timing: bool = False
    jobs: int = 1

    def validate(self) -> "AnalysisConfig":
        for name in ("max_loop_iterations", "max_call_depth", "branch_split_budget",
                     "max_steps", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name.replace('_', '-')} must be at least 1")
        if self.output_format not in ("json", "text"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        return self
