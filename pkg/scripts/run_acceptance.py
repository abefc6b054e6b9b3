"""Run the acceptance suite and print one PASS/FAIL line per criterion.

Usage: python scripts/run_acceptance.py [extra pytest args]
The closed-loop benchmark (20 episodes) takes a few minutes on one core.
"""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    tests = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(tests), "-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
