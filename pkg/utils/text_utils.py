"""Text utility functions for formatting numbers and tables."""

import math


def fmt_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    if value is None:
        return ""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def fmt_sequence(labels) -> str:
    """Compact action list for console output."""
    return " ".join(str(a) for a in labels)


def format_table(rows, headers) -> str:
    """Left-aligned plain-text table for summaries printed to standard output."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for k, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
