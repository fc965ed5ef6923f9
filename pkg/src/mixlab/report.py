"""Residual report rows with machine-readable JSON and CSV output.

Reports are deterministic: keys are sorted, floats go through ``repr``,
and timestamps live in a separate metadata file so identical runs produce
byte-identical report bundles.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

__all__ = ["ResidualRow", "SuiteReport", "write_json", "write_rows_csv"]


@dataclass
class ResidualRow:
    """One checked statement: residual norms against a tolerance."""

    equation: str
    variant: str
    linf: float
    l2: float
    tolerance: float
    passed: bool

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "variant": self.variant,
            "linf": self.linf,
            "l2": self.l2,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


@dataclass
class SuiteReport:
    name: str
    seed: int
    conventions: dict = field(default_factory=dict)
    rows: list[ResidualRow] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, equation: str, variant: str, linf: float, tolerance: float,
            l2: float | None = None) -> ResidualRow:
        row = ResidualRow(
            equation=equation,
            variant=variant,
            linf=float(linf),
            l2=float(linf if l2 is None else l2),
            tolerance=float(tolerance),
            passed=bool(float(linf) <= float(tolerance)),
        )
        self.rows.append(row)
        return row

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "seed": self.seed,
            "conventions": self.conventions,
            "rows": [r.to_dict() for r in self.rows],
            "notes": self.notes,
            "passed": self.passed,
        }

    def write(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        write_json(self.to_dict(), os.path.join(directory, f"{self.name}.json"))
        write_rows_csv(self.rows, os.path.join(directory, f"{self.name}.csv"))


def write_json(doc: dict, path: str) -> None:
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_rows_csv(rows: list[ResidualRow], path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["equation", "variant", "linf", "l2", "tolerance", "verdict"])
        for r in rows:
            writer.writerow([r.equation, r.variant, repr(r.linf), repr(r.l2), repr(r.tolerance), r.verdict])
