"""Collects the one-line acceptance verdicts for the end-of-run summary."""

LINES = []


def record(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    LINES.append(line)
    return line
