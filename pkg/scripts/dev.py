#!/usr/bin/env python3
"""
Development tasks for adaptcast

Usage:
    python scripts/dev.py <command>

Available commands:
    lint        - ruff check, format check and mypy on the package
    format      - Format code with ruff
    test        - Fast tests (everything not marked slow)
    test-all    - Every test, acceptance checks included
    test-unit   - Unit tests only
    test-int    - Integration and acceptance tests
    coverage    - Fast tests with an HTML coverage report
    demo        - Small synthetic run: synth, cluster, train, eval, report
    clean       - Remove caches and demo outputs
    install     - Install development dependencies
    pre-commit  - Set up pre-commit hooks
    check       - lint + test
"""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent

DEMO_RUN = "demo"
DEMO_FLAGS = f"--run-id {DEMO_RUN} --data demo/cells.csv --store demo/store --reports demo/reports"


def run_command(cmd: str) -> int:
    """Run a shell command from the project root and return its exit code"""
    print(f"🔧 Running: {cmd}")
    result = subprocess.run(cmd, shell=True, cwd=ROOT)
    if result.returncode != 0:
        print(f"❌ Failed with exit code {result.returncode}")
    return result.returncode


def run_sequence(commands: list[str]) -> int:
    """Run commands in order, stopping at the first failure"""
    for cmd in commands:
        code = run_command(cmd)
        if code != 0:
            return code
    print("✅ Success")
    return 0


def lint() -> int:
    print("🔍 Running code quality checks...")
    return run_sequence(
        [
            "uv run --quiet ruff check .",
            "uv run --quiet ruff format --check .",
            "uv run --quiet mypy adaptcast",
        ]
    )


def format_code() -> int:
    print("🎨 Formatting code...")
    return run_command("uv run --quiet ruff format .")


def test() -> int:
    print("🧪 Running fast tests...")
    return run_command("uv run --quiet pytest -m 'not slow'")


def test_all() -> int:
    print("🧪 Running all tests (acceptance checks take a few minutes)...")
    return run_command("uv run --quiet pytest")


def test_unit() -> int:
    print("🧪 Running unit tests...")
    return run_command("uv run --quiet pytest tests/unit/")


def test_integration() -> int:
    print("🧪 Running integration tests...")
    return run_command("uv run --quiet pytest tests/integration/ -m integration")


def coverage() -> int:
    print("📊 Running tests with coverage...")
    code = run_command("uv run --quiet pytest -m 'not slow' --cov-report=html")
    if code == 0:
        print("📊 Coverage report generated in htmlcov/index.html")
    return code


def demo() -> int:
    """Two-week, six-cell run with a small LSTM"""
    print("🚀 Running the synthetic demo...")
    flags = f"{DEMO_FLAGS} --k 1 2 4 --variants uni,all --holdout cell_000"
    return run_sequence(
        [
            f"uv run --quiet adaptcast synth {DEMO_FLAGS} --cells 6 --weeks 2 --seed 7",
            f"uv run --quiet adaptcast cluster {flags}",
            f"uv run --quiet adaptcast train {flags} --epochs 10",
            f"uv run --quiet adaptcast eval {flags}",
            f"uv run --quiet adaptcast report {DEMO_FLAGS}",
        ]
    )


def clean() -> int:
    print("🧹 Cleaning up generated files...")
    return run_sequence(
        [
            "rm -rf .pytest_cache .coverage htmlcov .mypy_cache .ruff_cache demo",
            "find . -type d -name __pycache__ -exec rm -rf {} + 2>/dev/null || true",
        ]
    )


def install() -> int:
    print("📦 Installing development dependencies...")
    return run_command("uv sync --dev")


def pre_commit_setup() -> int:
    print("🪝 Setting up pre-commit hooks...")
    return run_sequence(
        [
            "uv run --quiet pre-commit install",
            "uv run --quiet pre-commit run --all-files || true",
        ]
    )


def check() -> int:
    print("🔎 Running lint and fast tests...")
    lint_result = lint()
    test_result = test()
    if lint_result == 0 and test_result == 0:
        print("🎉 All checks passed!")
        return 0
    print("❌ Some checks failed")
    return max(lint_result, test_result)


def help_command() -> int:
    print(__doc__)
    return 0


COMMANDS = {
    "lint": lint,
    "format": format_code,
    "test": test,
    "test_all": test_all,
    "test_unit": test_unit,
    "test_int": test_integration,
    "test_integration": test_integration,
    "coverage": coverage,
    "demo": demo,
    "clean": clean,
    "install": install,
    "pre_commit": pre_commit_setup,
    "check": check,
    "help": help_command,
}


def main():
    if len(sys.argv) < 2:
        help_command()
        sys.exit(1)

    command = sys.argv[1].replace("-", "_")
    if command not in COMMANDS:
        print(f"❌ Unknown command: {sys.argv[1]}")
        print("Available commands:", ", ".join(sorted(COMMANDS)))
        sys.exit(1)
    try:
        sys.exit(COMMANDS[command]())
    except KeyboardInterrupt:
        print("\n⏹️  Operation cancelled by user")
        sys.exit(130)


if __name__ == "__main__":
    main()
