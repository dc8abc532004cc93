"""
Output formatters for evaluation results
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd

from ..config import FeatureVariant

LONG_COLUMNS = ["k", "config", "metric", "value"]


class MarkdownFormatter:
    """Formats sweep results as a configuration x K markdown table"""

    def create_report(
        self,
        rows: Sequence[dict[str, Any]],
        filename: str | Path,
        run_id: str,
        metric: str = "weighted_mae",
    ) -> None:
        """
        Create a markdown report from long-format result rows

        Args:
            rows: Result rows with k, config, metric and value
            filename: Output filename
            run_id: Run the results belong to
            metric: Metric shown in the table
        """
        content = self._generate_markdown_content(rows, run_id, metric)
        with open(filename, "w", encoding="utf-8") as f:
            f.write(content)

    def _generate_markdown_content(
        self, rows: Sequence[dict[str, Any]], run_id: str, metric: str
    ) -> str:
        selected = [r for r in rows if r["metric"] == metric]
        k_values = sorted({int(r["k"]) for r in selected})
        configs = [v for v in FeatureVariant if any(r["config"] == v.value for r in selected)]
        cells = {(r["config"], int(r["k"])): float(r["value"]) for r in selected}

        content = f"# adaptcast evaluation report\n\n**Run:** {run_id}\n"
        content += f"**Metric:** {metric} (normalized units)\n\n---\n\n"
        content += "## MAE by configuration and K\n\n"
        content += "| Configuration | " + " | ".join(f"K{k}" for k in k_values) + " |\n"
        content += "|---|" + "---|" * len(k_values) + "\n"
        for variant in configs:
            values = [cells.get((variant.value, k)) for k in k_values]
            formatted = [f"{v:.3f}" if v is not None else "-" for v in values]
            name = FeatureVariant.get_display_name(variant)
            content += f"| {name} | " + " | ".join(formatted) + " |\n"

        baselines = [r for r in rows if r["metric"].startswith("baseline_mae")]
        if baselines:
            content += "\n## Single-cell baselines\n\n| Configuration | Trained on | MAE |\n|---|---|---|\n"
            for r in baselines:
                cell = r["metric"][len("baseline_mae[") : -1]
                name = FeatureVariant.get_display_name(FeatureVariant(r["config"]))
                content += f"| {name} | {cell} | {float(r['value']):.3f} |\n"

        content += "\n---\n\n*Report generated by adaptcast*\n"
        return content


def write_long_csv(rows: Sequence[dict[str, Any]], path: str | Path) -> Path:
    """Write (k, config, metric, value) rows in a stable order"""
    frame = pd.DataFrame(list(rows), columns=LONG_COLUMNS)
    frame = frame.sort_values(["config", "k", "metric"], kind="stable")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path


def read_long_csv(path: str | Path) -> list[dict[str, Any]]:
    return pd.read_csv(path).to_dict(orient="records")
