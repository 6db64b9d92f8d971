"""Collects acceptance-criterion outcomes for the terminal summary."""

RESULTS: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, passed: bool, detail: str = "") -> None:
    RESULTS[number] = (title, passed, detail)


def lines() -> list[str]:
    return [
        f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
        for n, (title, ok, detail) in sorted(RESULTS.items())
    ]
