#!/usr/bin/env python3
"""Generate a static HTML report of stored replicate studies."""

import argparse
from datetime import datetime
from pathlib import Path
from typing import Optional

import pandas as pd
from jinja2 import Environment, FileSystemLoader

import db


def summarize_cells(rows: list[dict]) -> pd.DataFrame:
    """Median, quartiles and replicate count of MSE x 1000 per study cell."""
    columns = ["example", "criterion", "design", "spline_order", "gamma", "knots"]
    if not rows:
        return pd.DataFrame(columns=columns + ["median", "q1", "q3", "iqr", "count"])

    frame = pd.DataFrame(rows)
    frame["mse_x1000"] = frame["mse"] * 1000.0
    grouped = frame.groupby(columns)["mse_x1000"]
    cells = pd.DataFrame({
        "median": grouped.median(),
        "q1": grouped.quantile(0.25),
        "q3": grouped.quantile(0.75),
        "count": grouped.size(),
    }).reset_index()
    cells["iqr"] = cells["q3"] - cells["q1"]
    return cells


def _gamma_key(label: str):
    # numeric factors first, then the ln forms
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def build_tables(cells: pd.DataFrame) -> list[dict]:
    """
    One table per (example, criterion, design, order): rows are inflation
    factors, columns initial knot counts, cells "median(IQR)".
    """
    tables = []
    keys = ["example", "criterion", "design", "spline_order"]
    for key, group in cells.groupby(keys, sort=True):
        example, criterion, design, order = key
        knots = sorted(group["knots"].unique())
        rows = []
        for gamma in sorted(group["gamma"].unique(), key=_gamma_key):
            by_knots = group[group["gamma"] == gamma].set_index("knots")
            values = []
            for k in knots:
                if k in by_knots.index:
                    cell = by_knots.loc[k]
                    values.append({
                        "text": f"{cell['median']:.1f}({cell['iqr']:.1f})",
                        "count": int(cell["count"]),
                    })
                else:
                    values.append(None)
            rows.append({"gamma": gamma, "cells": values})
        tables.append({
            "title": f"Example {example}: {criterion.upper()}, order {order}, {design} design",
            "knots": [int(k) for k in knots],
            "rows": rows,
        })
    return tables


def generate_report(db_path: Optional[Path] = None, output_path: Path = None) -> Path:
    """Generate the HTML report."""

    if output_path is None:
        output_path = Path(__file__).parent / "output" / "report.html"

    # Ensure output directory exists
    output_path.parent.mkdir(parents=True, exist_ok=True)

    # Initialize database if needed
    db.init_db(db_path)

    rows = db.get_replicates(db_path=db_path)
    tables = build_tables(summarize_cells(rows))

    # Set up Jinja2
    template_dir = Path(__file__).parent / "templates"
    env = Environment(loader=FileSystemLoader(template_dir), autoescape=True)
    template = env.get_template("report.html")

    html = template.render(
        tables=tables,
        examples=db.get_examples(db_path),
        total_replicates=db.get_replicate_count(db_path),
        last_updated=datetime.now().strftime("%Y-%m-%d %H:%M"),
    )

    output_path.write_text(html)
    print(f"Report generated: {output_path}")

    return output_path


def main():
    parser = argparse.ArgumentParser(description="Generate the replicate study report")
    parser.add_argument(
        "--db",
        type=Path,
        help="Study database (default: studies.db next to this script)"
    )
    parser.add_argument(
        "--output", "-O",
        type=Path,
        help="Output path for the HTML file"
    )

    args = parser.parse_args()
    generate_report(args.db, args.output)


if __name__ == "__main__":
    main()
