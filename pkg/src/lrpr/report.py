"""Success-rate aggregation and static SVG charts from sweep CSVs."""

import csv
from collections import defaultdict
from pathlib import Path

from .core import LrprError
from .experiment import CSV_HEADER

SUMMARY_HEADER = ["cell", "algo", "init", "success_rate", "n_trials"]
AXES = {"rank": "r", "measurements": "p"}

_INT_COLUMNS = ("seed", "trial", "n", "m", "p", "r", "iters")
_BOOL = {"true": True, "false": False}


class SchemaError(LrprError, ValueError):
    pass


def read_results(path):
    """Parse a results CSV into typed dicts, validating the header and every value."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for want, got in zip(CSV_HEADER, header):
            if want != got:
                raise SchemaError(f"column {got!r} found where {want!r} was expected")
        if len(header) != len(CSV_HEADER):
            missing = CSV_HEADER[len(header):] or header[len(CSV_HEADER):]
            raise SchemaError(f"column count mismatch at {missing[0]!r}")
        return [_parse_row(row, i + 2) for i, row in enumerate(reader)]


def _parse_row(row, line):
    out = dict(row)
    for col in CSV_HEADER:
        value = row.get(col)
        if value is None:
            raise SchemaError(f"line {line}: column {col!r} missing")
        try:
            if col in _INT_COLUMNS:
                out[col] = int(value)
            elif col in ("converged", "success"):
                out[col] = _BOOL[value]
            elif col == "re":
                out[col] = float(value) if value else float("inf")
            elif col == "runtime_ms":
                out[col] = float(value)
        except (ValueError, KeyError) as exc:
            raise SchemaError(f"line {line}: bad value {value!r} in column {col!r}") from exc
    return out


def aggregate(rows):
    """Success rate per (r, p, algo, init), sorted by those keys."""
    groups = defaultdict(list)
    for row in rows:
        groups[(row["r"], row["p"], row["algo"], row["init"])].append(row["success"])
    return [
        {"r": r, "p": p, "algo": algo, "init": init,
         "success_rate": sum(flags) / len(flags), "n_trials": len(flags)}
        for (r, p, algo, init), flags in sorted(groups.items())
    ]


def write_summary(path, summary):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for row in summary:
            writer.writerow([f"r={row['r']};p={row['p']}", row["algo"], row["init"],
                             repr(row["success_rate"]), row["n_trials"]])


def series(summary, axis):
    """Curves ``label -> [(axis value, success rate)]``; one per (algo, init) and fixed other dimension."""
    key = AXES[axis]
    other = "p" if key == "r" else "r"
    others = sorted({row[other] for row in summary})
    curves = defaultdict(list)
    for row in summary:
        label = f"{row['algo']}+{row['init']}"
        if len(others) > 1:
            label += f", {other.upper() if other == 'p' else other}={row[other]}"
        curves[label].append((row[key], row["success_rate"]))
    return {label: sorted(pts) for label, pts in sorted(curves.items())}


def plot_svg(curves, axis, out):
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    matplotlib.rcParams["svg.hashsalt"] = "lrpr"
    fig = Figure(figsize=(5.5, 4.0))
    ax = fig.add_subplot()
    for label, pts in curves.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("rank r" if axis == "rank" else "measurements per column P")
    ax.set_ylabel("success rate")
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})


def summary_path(svg_path):
    svg_path = Path(svg_path)
    return svg_path.with_name(svg_path.stem + "_summary.csv")


def report(results_csv, axis, out):
    """Write the chart to ``out`` and the aggregate next to it; returns both paths."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {sorted(AXES)}")
    summary = aggregate(read_results(results_csv))
    agg_path = summary_path(out)
    write_summary(agg_path, summary)
    plot_svg(series(summary, axis), axis, out)
    return Path(out), agg_path
