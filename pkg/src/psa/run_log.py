"""Run manifests for CLI commands.

Every command records what it read, which parameters it used, what it wrote
and how long each phase took. The manifest is written next to the outputs
as ``<command>.manifest.json`` and appended as one line to the JSONL run log
(``PSA_RUN_LOG``; empty disables the log).

Usage:
    from psa.run_log import RunRecorder

    with RunRecorder("enumerate", argv, out_dir, parameters={"tol": 1e-8}) as rec:
        rec.add_input("xsec", path)
        with rec.phase_ctx("Descent", detail="L=2"):
            ...
        rec.add_output("solutions", out_path)

``replay(manifest)`` re-runs the recorded command line; outputs hold no
timestamps, so a replay reproduces them byte for byte.
"""

from __future__ import annotations

import json
import logging
import os
import time
import uuid
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, config
from .codec import dump_json, load_json

LOGGER = logging.getLogger(__name__)


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    run_id: str = ""
    version: str = __version__
    started_at: str = ""  # ISO
    wall_clock_s: float | None = None
    status: str = "running"  # ok | error | running
    exit_code: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    phases: list[dict] = field(default_factory=list)  # [{name, duration_s, detail}]
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> RunManifest:
        return cls(
            command=d.get("command", ""),
            argv=list(d.get("argv", [])),
            run_id=d.get("run_id", ""),
            version=d.get("version", ""),
            started_at=d.get("started_at", ""),
            wall_clock_s=d.get("wall_clock_s"),
            status=d.get("status", "ok"),
            exit_code=d.get("exit_code"),
            inputs=dict(d.get("inputs", {})),
            parameters=dict(d.get("parameters", {})),
            outputs=dict(d.get("outputs", {})),
            phases=list(d.get("phases", [])),
            error=d.get("error"),
        )

    @classmethod
    def from_json_line(cls, line: str) -> RunManifest | None:
        line = line.strip()
        if not line:
            return None
        try:
            return cls.from_dict(json.loads(line))
        except (json.JSONDecodeError, TypeError, AttributeError):
            return None


class RunRecorder:
    """Context manager that times a command and writes its manifest."""

    def __init__(
        self,
        command: str,
        argv: list[str],
        out_dir: str | Path,
        *,
        parameters: dict | None = None,
        log_path: Path | None = None,
    ):
        self.out_dir = Path(out_dir)
        self.log_path = log_path if log_path is not None else get_log_path()
        self.manifest = RunManifest(
            command=command,
            argv=list(argv),
            run_id=str(uuid.uuid4())[:8],
            parameters=dict(parameters or {}),
        )
        self._start_time: float | None = None

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / f"{self.manifest.command}.manifest.json"

    def start(self) -> None:
        self.manifest.started_at = datetime.now(timezone.utc).isoformat()
        self._start_time = time.perf_counter()

    def add_input(self, role: str, path: str | Path) -> None:
        self.manifest.inputs[role] = str(path)

    def add_output(self, role: str, path: str | Path) -> None:
        self.manifest.outputs[role] = str(path)

    @contextmanager
    def phase_ctx(self, name: str, detail: str | None = None) -> Iterator[None]:
        """Time a phase."""
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.manifest.phases.append(
                {"name": name, "duration_s": round(time.perf_counter() - t0, 4), "detail": detail}
            )

    def fail(self, exit_code: int, error: str) -> None:
        """Record a handled failure; the manifest is still written on exit."""
        self.manifest.status = "error"
        self.manifest.exit_code = exit_code
        self.manifest.error = error

    def end(self) -> None:
        if self._start_time is None:
            return
        self.manifest.wall_clock_s = round(time.perf_counter() - self._start_time, 4)
        if self.manifest.status == "running":
            self.manifest.status = "ok"
            self.manifest.exit_code = 0
        try:
            dump_json(self.manifest.to_dict(), self.manifest_path)
        except OSError as e:
            LOGGER.warning("Manifest write failed: %s", e)
        if self.log_path is None:
            return
        try:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(self.manifest.to_json_line() + "\n")
        except OSError as e:
            LOGGER.warning("Run log append failed: %s", e)

    def __enter__(self) -> RunRecorder:
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if exc_type is not None and self.manifest.status == "running":
            self.manifest.status = "error"
            self.manifest.error = (
                f"{exc_type.__name__}: {exc_val}" if exc_val else exc_type.__name__
            )
        self.end()
        return None  # do not suppress


def load_recent_runs(
    n: int = 100,
    *,
    command: str | None = None,
    log_path: Path | None = None,
) -> list[RunManifest]:
    """The last n recorded runs, newest first. Optionally filter by command."""
    path = log_path or get_log_path()
    if path is None or not path.exists():
        return []
    runs: list[RunManifest] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            run = RunManifest.from_json_line(line)
            if run is None:
                continue
            if command is None or run.command == command:
                runs.append(run)
    return runs[::-1][:n]


def get_log_path() -> Path | None:
    """Run log path from ``PSA_RUN_LOG`` (read at call time); None when disabled."""
    raw = os.environ.get("PSA_RUN_LOG", config.RUN_LOG).strip()
    return Path(raw) if raw else None


def replay(manifest: RunManifest | str | Path, out_dir: str | Path | None = None) -> int:
    """Re-run a recorded command; returns its exit code.

    With ``out_dir`` the recorded ``--out`` is replaced so the outputs of
    both runs can be compared side by side.
    """
    from .cli import main

    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.from_dict(load_json(manifest))
    argv = list(manifest.argv)
    if out_dir is not None:
        if "--out" in argv:
            argv[argv.index("--out") + 1] = str(out_dir)
        else:
            argv += ["--out", str(out_dir)]
    LOGGER.info("Replaying %s (run %s)", manifest.command, manifest.run_id)
    return main(argv)
