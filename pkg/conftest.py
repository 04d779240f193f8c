"""Registers every module under `testlib/**/fixtures/` as a pytest plugin, so fixtures need no explicit import."""

from pathlib import Path

ROOT = Path(__file__).parent


def _fixture_modules(root: Path) -> list[str]:
    # Resolved from this file rather than the working directory; sorted so plugin order is stable.
    return sorted(
        ".".join(path.relative_to(root).with_suffix("").parts)
        for path in (root / "testlib").rglob("fixtures/*.py")
        if not path.name.startswith("_")
    )


pytest_plugins = _fixture_modules(ROOT)
