#!/usr/bin/env python3
"""
Habibullin counterexample verifier - Startup Script
Checks the environment, runs the self-check and verifies the three default conjectures
"""

import sys
from pathlib import Path


def check_python_version():
    """Check if Python version is compatible"""
    if sys.version_info < (3, 9):
        print("❌ Error: Python 3.9 or higher is required")
        sys.exit(1)
    print(f"✅ Python {sys.version_info.major}.{sys.version_info.minor} detected")


def check_dependencies():
    """Check if required dependencies are installed"""
    try:
        import dotenv
        import mpmath
        import pydantic
        print(f"✅ All dependencies are installed (mpmath {mpmath.__version__}, pydantic {pydantic.VERSION})")
    except ImportError as e:
        print(f"❌ Missing dependency: {e}")
        print("Please run: pip install -r requirements.txt")
        sys.exit(1)


def check_env_file():
    """Create a .env from the template if there is none"""
    env_file = Path(".env")
    if env_file.exists():
        print("✅ Using settings from .env")
        return
    template = Path(".env.example")
    if template.exists():
        env_file.write_text(template.read_text())
        print("📝 Created .env from .env.example (standard precision, tol 1e-12)")
    else:
        print("⚠️  No .env file; using built-in defaults")


def run_selfcheck(executor) -> bool:
    print("🔍 Running self-check...")
    result = executor.execute_command("selfcheck", {})
    failed = [name for name, ok in result["checks"].items() if not ok]
    if failed:
        for name in failed:
            print(f"❌ {name}")
        return False
    print(f"✅ {len(result['checks'])} self-checks passed")
    return True


def run_defaults(executor) -> bool:
    ok = True
    for conjecture in (1, 2, 3):
        result = executor.execute_command("verify", {"conjecture": conjecture, "epsilon": 1})
        if not result["success"]:
            print(f"❌ Conjecture {conjecture}: {result['error']}")
            ok = False
            continue
        report = result["report"]
        margin = report.violation_report.margin if report.violation_report else None
        span = f" (margin in [{margin.lo}, {margin.hi}])" if margin else ""
        mark = "✅" if result["exit_code"] == 0 else "⚠️ "
        print(f"{mark} Conjecture {conjecture}: {report.verdict.value}{span}")
        ok = ok and result["exit_code"] == 0
    return ok


def main():
    """Main startup function"""
    print("🧮 Habibullin counterexample verifier")
    print("=" * 40)

    check_python_version()
    check_dependencies()
    check_env_file()

    from habibullin_verify.agent import VerificationAgent
    from habibullin_verify.tools import CommandExecutor

    executor = CommandExecutor(VerificationAgent())
    if not run_selfcheck(executor):
        print("❌ Self-check failed; results below are not trustworthy")
        sys.exit(2)
    if not run_defaults(executor):
        sys.exit(2)
    print("\nRun 'python -m habibullin_verify --help' for the full command set")


if __name__ == "__main__":
    main()
