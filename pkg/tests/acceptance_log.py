"""Collects one summary line per acceptance criterion for the terminal report."""
LINES: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> bool:
    LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(LINES[number])
    return passed
