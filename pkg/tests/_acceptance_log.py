"""Shared store for the one-line acceptance verdicts printed at the end of a run."""

LINES = []


def report(number, ok, detail):
    line = f"criterion {number:>4}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok
