"""Operator command line: chat, serve, simulate, evaluate, stress, audit.

Exit codes: 0 success, 1 configuration error, 2 backend failure,
3 validation failure. Stable for scripting and CI.

Every command is re-runnable over the same inputs: outputs carry schema
versions and are written whole (never appended), so a rerun reproduces the
same files byte for byte.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import click

from .backends import BackendError, DemoBackend, ScriptExhaustedError
from .cognition import SnapshotError
from .config import (
    ConfigError,
    RunConfig,
    bundled_library_path,
    bundled_stress_library_path,
    load_run_config,
)
from .harness import (
    CaseValidationError,
    aggregate,
    cohen_kappa,
    filter_trajectories,
    judge_trajectory,
    load_case_library,
    render_rate_table,
    render_stress_table,
    run_trajectory,
    stress_metrics,
)
from .harness.demo import library_backends, stress_backends
from .session import (
    VARIANTS,
    UnknownVariantError,
    handle_user_turn,
    start_session,
)
from .trajectory import TrajectoryLog

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BACKEND = 2
EXIT_VALIDATION = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, UnknownVariantError) as exc:
            _fail(EXIT_CONFIG, str(exc))
        except (BackendError, ScriptExhaustedError) as exc:
            _fail(EXIT_BACKEND, str(exc))
        except (CaseValidationError, SnapshotError, ValueError) as exc:
            _fail(EXIT_VALIDATION, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(package_name="stagegate")
def main() -> None:
    """Staged supportive-dialogue engine and its evaluation harness."""


# ---------------------------------------------------------------------------
# chat / serve
# ---------------------------------------------------------------------------


@main.command()
@click.option("--variant", default="lekia", type=click.Choice(VARIANTS), show_default=True)
@click.option("--backend-config", type=click.Path(path_type=Path), default=None,
              help="Run-config JSON; the default chats against the offline demo backend.")
@_guarded
def chat(variant: str, backend_config: Optional[Path]) -> None:
    """Interactive terminal session against a chosen variant."""
    config = load_run_config(backend_config)
    backend = config.engine.build() or DemoBackend()
    session = start_session(variant, backend=backend, config=config.session)
    click.echo(f"session {session.id} ({variant}); empty line to quit")
    while not session.complete:
        try:
            text = click.prompt("you", prompt_suffix="> ").strip()
        except (EOFError, KeyboardInterrupt, click.Abort):
            break
        if not text:
            break
        reply = handle_user_turn(session, text)
        click.echo(f"[{reply.affect.value}] {reply.text}")
        if session.control is not None:
            ctrl = session.control
            flags = ", ".join(f for f, v in ctrl.progress.items() if v) or "none"
            click.echo(
                f"  (stage={ctrl.stage.value} flags={flags} "
                f"offer_pending={ctrl.offer_pending} cooldown={ctrl.cooldown_remaining})"
            )
    click.echo("bye")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8742, show_default=True)
@click.option("--backend-config", type=click.Path(path_type=Path), default=None)
@_guarded
def serve(host: str, port: int, backend_config: Optional[Path]) -> None:
    """Start the HTTP session service for the web console."""
    from .service import SessionHub, serve as _serve

    config = load_run_config(backend_config)

    def factory():
        return config.engine.build() or DemoBackend()

    _serve(host=host, port=port, hub=SessionHub(backend_factory=factory, config=config.session))


# ---------------------------------------------------------------------------
# simulate / evaluate / stress / audit
# ---------------------------------------------------------------------------


def _log_name(case_id: str, variant: str) -> str:
    return f"{case_id}__{variant}.json"


def _run_one(config: RunConfig, case, variant: str, stress: bool) -> TrajectoryLog:
    if config.engine.kind == "bundled" or config.seeker.kind == "bundled":
        builder = stress_backends if stress else library_backends
        engine, seeker = builder(case, variant, config.seed)
        if config.engine.kind != "bundled":
            engine = config.engine.build()
        if config.seeker.kind != "bundled":
            seeker = config.seeker.build()
    else:
        engine = config.engine.build()
        seeker = config.seeker.build()
    return run_trajectory(
        variant, case, engine, seeker, max_turns=config.max_turns, config=config.session
    )


def _simulate_runs(
    config: RunConfig, library: Path, out_dir: Path, variants: tuple[str, ...], stress: bool
) -> list[TrajectoryLog]:
    cases = load_case_library(library)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(case, variant) for case in cases for variant in variants]
    logs: list[TrajectoryLog] = []
    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        for log in pool.map(lambda job: _run_one(config, job[0], job[1], stress), jobs):
            logs.append(log)
            log.save(out_dir / _log_name(log.case_id, log.variant))
    return logs


@main.command()
@click.option("--library", type=click.Path(path_type=Path), default=None,
              help="Case library (JSONL); defaults to the bundled 24-case library.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--variant", "variants", multiple=True, type=click.Choice(VARIANTS),
              help="Repeatable; defaults to all three variants.")
@click.option("--workers", default=None, type=int)
@click.option("--max-turns", default=None, type=int)
@click.option("--seed", default=None, type=int, help="Seed for scripted playbook selection.")
@click.option("--backend-config", type=click.Path(path_type=Path), default=None)
@_guarded
def simulate(library, out_dir, variants, workers, max_turns, seed, backend_config) -> None:
    """Run trajectories for the selected variants over a case library."""
    config = load_run_config(backend_config)
    if workers is not None:
        config.workers = workers
    if max_turns is not None:
        config.max_turns = max_turns
    if seed is not None:
        config.seed = seed
    library = library or config.library or bundled_library_path()
    out_dir = out_dir or config.out_dir
    chosen = tuple(variants) or VARIANTS
    logs = _simulate_runs(config, library, out_dir, chosen, stress=False)
    kept, dropped = filter_trajectories(logs)
    click.echo(
        f"wrote {len(logs)} trajectory logs to {out_dir} "
        f"({len(kept)} kept, {len(dropped)} filtered)"
    )


@main.command()
@click.option("--logs", "logs_dir", type=click.Path(path_type=Path), required=True)
@click.option("--library", type=click.Path(path_type=Path), default=None,
              help="Case library used to stratify by distress type.")
@click.option("--out", "out_file", type=click.Path(path_type=Path), default=None)
@click.option("--backend-config", type=click.Path(path_type=Path), default=None)
@_guarded
def evaluate(logs_dir: Path, library, out_file, backend_config) -> None:
    """Judge trajectory logs and report completion rates per variant."""
    config = load_run_config(backend_config)
    judge_backend = config.judge.build()
    if judge_backend is None:
        raise ConfigError("the judge backend cannot be 'bundled'; use rule/demo/http")
    cases = load_case_library(library or config.library or bundled_library_path())
    type_of = {case.id: case.distress_type for case in cases}

    paths = sorted(Path(logs_dir).glob("*.json"))
    if not paths:
        raise CaseValidationError(f"no trajectory logs found in {logs_dir}")
    by_variant: dict[str, list[TrajectoryLog]] = {}
    for path in paths:
        log = TrajectoryLog.load(path)
        by_variant.setdefault(log.variant, []).append(log)

    report_doc: dict = {"schema_version": 1, "variants": {}}
    for variant in sorted(by_variant):
        logs = by_variant[variant]
        kept, _ = filter_trajectories(logs)
        metrics = [judge_trajectory(log, judge_backend) for log in kept]
        groups = [type_of.get(log.case_id, "unknown") for log in kept]
        report = aggregate(metrics, group_keys=groups)
        report_doc["variants"][variant] = report.to_dict()
        click.echo(render_rate_table(report, title=f"completion rates - {variant}"))
        click.echo("")
    if out_file:
        Path(out_file).write_text(
            json.dumps(report_doc, ensure_ascii=False, sort_keys=True, indent=2), encoding="utf-8"
        )
        click.echo(f"wrote {out_file}")


@main.command()
@click.option("--library", type=click.Path(path_type=Path), default=None,
              help="High-resistance pack (JSONL); defaults to the bundled 10-case pack.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--workers", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--backend-config", type=click.Path(path_type=Path), default=None)
@_guarded
def stress(library, out_dir, workers, seed, backend_config) -> None:
    """Run the resistance stress pack and report boundary metrics."""
    config = load_run_config(backend_config)
    if workers is not None:
        config.workers = workers
    if seed is not None:
        config.seed = seed
    library = library or bundled_stress_library_path()
    out_dir = out_dir or (config.out_dir / "stress")
    judge_backend = config.judge.build()
    logs = _simulate_runs(config, library, out_dir, VARIANTS, stress=True)
    reports = {}
    doc: dict = {"schema_version": 1, "variants": {}}
    for variant in VARIANTS:
        variant_logs = [log for log in logs if log.variant == variant]
        report = stress_metrics(variant_logs, judge_backend=judge_backend)
        reports[variant] = report
        doc["variants"][variant] = report.to_dict()
    click.echo(render_stress_table(reports))
    report_path = out_dir / "stress_report.json"
    report_path.write_text(
        json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2), encoding="utf-8"
    )
    click.echo(f"wrote {report_path}")


@main.command()
@click.argument("labels_a", type=click.Path(path_type=Path))
@click.argument("labels_b", type=click.Path(path_type=Path))
@_guarded
def audit(labels_a: Path, labels_b: Path) -> None:
    """Agreement audit: chance-corrected kappa between two label files.

    Each file holds one label per line; lines align by position.
    """
    a = [line.strip() for line in labels_a.read_text(encoding="utf-8").splitlines() if line.strip()]
    b = [line.strip() for line in labels_b.read_text(encoding="utf-8").splitlines() if line.strip()]
    value = cohen_kappa(a, b)
    click.echo(json.dumps({"n": len(a), "kappa": value}, indent=2))


if __name__ == "__main__":
    main()
