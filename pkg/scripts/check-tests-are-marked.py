#! python
# Tests are selected by type marker (unit, integration, functional), so a test without one silently drops out of
# every CI job that filters on markers. This collects the tests that carry none of them and fails when any exist.
#
# Collection imports the test modules, so this must run inside the project's environment rather than as an isolated
# pre-commit hook.
import re
import sys
from subprocess import CompletedProcess, run

TYPE_MARKERS = ("unit", "integration", "functional")
NO_TESTS_COLLECTED = 5
USAGE_ERROR = 4
INTERRUPTED = 2


def main() -> int:
    selector = " and ".join(f"not {marker}" for marker in TYPE_MARKERS)
    collected: CompletedProcess = run(
        ["pytest", "--no-header", "--collect-only", "-q", "-m", selector, "tests"],
        capture_output=True,
    )
    output = collected.stdout.decode("utf-8")
    if collected.returncode == NO_TESTS_COLLECTED:
        print("Every test carries a type marker.")
        return 0
    if collected.returncode in {INTERRUPTED, USAGE_ERROR}:
        print("Test collection failed, most likely on an import error:", file=sys.stderr)
        print(output, collected.stderr.decode("utf-8"), sep="\n", file=sys.stderr)
        return collected.returncode

    unmarked = [line for line in output.splitlines() if "::" in line]
    summary = re.search(r"(\d+)/(\d+) tests collected", output)
    count = summary.group(1) if summary else str(len(unmarked))
    print(f"{count} tests have no type marker. Apply one of {', '.join(TYPE_MARKERS)} to:", file=sys.stderr)
    print("\n".join(unmarked), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
