"""
Plain-text Formatter for run summaries

Renders the results printed to stdout by the CLI:
- gradient-check pass/fail table
- condition-wise WA/UA table
- ablation rows, one per model variant
"""

from typing import Any, Dict, Iterable, List, Sequence

from core.models import ALL_CONDITIONS
from evaluation.gradcheck_suite import GradCheckRow


class TextFormatter:
    """
    Formats results as fixed-width text tables

    Numbers are printed with four decimals so tables stay aligned.
    """

    NUMBER_FORMAT = "{:.4f}"

    @staticmethod
    def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        rows = [list(r) for r in rows]
        widths = [len(h) for h in header]
        for row in rows:
            widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)),
            "  ".join("-" * w for w in widths),
        ]
        lines += ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
        return "\n".join(lines)

    @classmethod
    def gradcheck_table(cls, rows: Sequence[GradCheckRow]) -> str:
        body = [
            (
                r.block,
                r.target,
                str(r.seed),
                f"{r.max_rel_err:.2e}",
                f"{r.tol:.0e}",
                "PASS" if r.passed else "FAIL",
            )
            for r in rows
        ]
        failed = sum(not r.passed for r in rows)
        summary = f"{len(rows) - failed}/{len(rows)} checks passed"
        return cls._table(("block", "target", "seed", "max_rel_err", "tol", "status"), body) + "\n" + summary

    @classmethod
    def _condition_cells(cls, report: Dict[str, Any], metric: str) -> List[str]:
        cells = [cls.NUMBER_FORMAT.format(report["conditions"][c.tag][metric]) for c in ALL_CONDITIONS]
        cells.append(cls.NUMBER_FORMAT.format(report["average"][metric]))
        return cells

    @classmethod
    def condition_table(cls, report: Dict[str, Any]) -> str:
        """Two rows (WA, UA) over the six conditions plus the average."""
        header = ("metric", *(c.label for c in ALL_CONDITIONS), "Average")
        rows = [(metric, *cls._condition_cells(report, metric)) for metric in ("WA", "UA")]
        return cls._table(header, rows)

    @classmethod
    def ablation_table(cls, variants: Dict[str, Dict[str, Any]]) -> str:
        """One WA row and one UA row per variant, shaped like a results table."""
        header = ("model", "metric", *(c.label for c in ALL_CONDITIONS), "Average")
        rows = []
        for name, report in variants.items():
            for metric in ("WA", "UA"):
                rows.append((name, metric, *cls._condition_cells(report, metric)))
        return cls._table(header, rows)
