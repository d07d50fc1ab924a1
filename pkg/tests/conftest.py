import time
from dataclasses import dataclass

import pytest

from spatialfuse.fusion import FusionConfig
from spatialfuse.sources import synth_samples
from spatialfuse.training import TrainResult, train_toy

# the trainability setting: 256 synthetic samples, D=16, 500 full-batch steps, lr 0.05
TOY = dict(seed=42, count=256, dim=16, steps=500, lr=0.05)


@dataclass
class TrainedToy:
    samples: list
    cfg: FusionConfig
    result: TrainResult
    seconds: float


@pytest.fixture(scope="session")
def trained_toy() -> TrainedToy:
    samples = synth_samples(TOY["seed"], TOY["count"], TOY["dim"])
    cfg = FusionConfig(dim=TOY["dim"])
    start = time.perf_counter()
    result = train_toy(samples, cfg, TOY["steps"], TOY["lr"], TOY["seed"])
    return TrainedToy(samples, cfg, result, time.perf_counter() - start)


@dataclass
class CliResult:
    code: int
    out: str
    err: str


def run_cli(*argv) -> CliResult:
    """Run the CLI in-process, capturing output and argparse's SystemExit."""
    import contextlib
    import io

    from spatialfuse.cli import main

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main([str(a) for a in argv])
        except SystemExit as exc:
            code = exc.code
    return CliResult(code, out.getvalue(), err.getvalue())


def snapshot(root) -> dict:
    """Relative path -> bytes for every file under ``root``."""
    from pathlib import Path

    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def cli():
    return run_cli


# acceptance verdict lines, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def verdict(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
