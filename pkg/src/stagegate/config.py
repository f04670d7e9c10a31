"""Run configuration: backend specs, library paths, and knobs for the CLI."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .backends import (
    DEFAULT_AUTH_ENV,
    DEFAULT_TIMEOUT_S,
    Backend,
    DemoBackend,
    HTTPBackend,
    RuleJudgeBackend,
)
from .session import SessionConfig

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("bundled", "demo", "http", "rule")


class ConfigError(ValueError):
    """The run configuration is malformed or inconsistent."""


@dataclass
class BackendSpec:
    """One backend slot: how to build it and what model it resolves to.

    ``bundled`` means per-case scripted playbooks (fully offline and
    deterministic); ``demo`` is the self-contained heuristic backend;
    ``http`` is a live chat-completions endpoint; ``rule`` is the
    deterministic lexical judge.
    """

    kind: str = "bundled"
    model: Optional[str] = None
    endpoint: Optional[str] = None
    auth_env: str = DEFAULT_AUTH_ENV
    timeout_s: float = DEFAULT_TIMEOUT_S

    @classmethod
    def from_dict(cls, data: dict) -> "BackendSpec":
        kind = data.get("kind", "bundled")
        if kind not in BACKEND_KINDS:
            raise ConfigError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")
        spec = cls(
            kind=kind,
            model=data.get("model"),
            endpoint=data.get("endpoint"),
            auth_env=data.get("auth_env", DEFAULT_AUTH_ENV),
            timeout_s=float(data.get("timeout_s", DEFAULT_TIMEOUT_S)),
        )
        if kind == "http" and (not spec.endpoint or not spec.model):
            raise ConfigError("http backends require both 'endpoint' and 'model'")
        return spec

    def build(self) -> Optional[Backend]:
        """Instantiate the backend, or ``None`` for per-case scripted kinds."""
        if self.kind == "bundled":
            return None
        if self.kind == "demo":
            return DemoBackend()
        if self.kind == "rule":
            return RuleJudgeBackend()
        return HTTPBackend(
            endpoint=self.endpoint or "",
            model=self.model or "",
            auth_env=self.auth_env,
            timeout_s=self.timeout_s,
        )


@dataclass
class RunConfig:
    engine: BackendSpec = field(default_factory=BackendSpec)
    seeker: BackendSpec = field(default_factory=BackendSpec)
    judge: BackendSpec = field(default_factory=lambda: BackendSpec(kind="rule"))
    library: Optional[Path] = None
    out_dir: Path = Path("runs")
    workers: int = 1
    max_turns: Optional[int] = None
    seed: int = 0
    session: SessionConfig = field(default_factory=SessionConfig)

    def heterogeneity_warnings(self) -> list[str]:
        """Warn when engine and seeker resolve to the same model.

        A homogeneous pairing invites self-preference between the system and
        its evaluator-side simulator; distinct models (or distinct backend
        kinds) are the intended setup.
        """
        warnings = []
        if (
            self.engine.kind == self.seeker.kind == "http"
            and self.engine.model
            and self.engine.model == self.seeker.model
        ):
            warnings.append(
                f"engine and seeker share the model {self.engine.model!r}; "
                "use an independent seeker model to avoid self-preference"
            )
        for warning in warnings:
            logger.warning(warning)
        return warnings


def load_run_config(path: Optional[Path]) -> RunConfig:
    """Load a JSON run config; missing path yields the all-offline defaults."""
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        config = RunConfig(
            engine=BackendSpec.from_dict(data.get("engine", {})),
            seeker=BackendSpec.from_dict(data.get("seeker", {})),
            judge=BackendSpec.from_dict(data.get("judge", {"kind": "rule"})),
            library=Path(data["library"]) if data.get("library") else None,
            out_dir=Path(data.get("out_dir", "runs")),
            workers=int(data.get("workers", 1)),
            max_turns=data.get("max_turns"),
            seed=int(data.get("seed", 0)),
            session=SessionConfig.from_dict(data.get("session", {}))
            if data.get("session")
            else SessionConfig(),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    config.heterogeneity_warnings()
    return config


def bundled_library_path() -> Path:
    return Path(str(resources.files("stagegate").joinpath("data/cases.jsonl")))


def bundled_stress_library_path() -> Path:
    return Path(str(resources.files("stagegate").joinpath("data/stress_cases.jsonl")))
