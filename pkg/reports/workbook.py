# reports/workbook.py
import logging
from pathlib import Path
from typing import Any, Mapping

from openpyxl import Workbook
from openpyxl.formatting.rule import CellIsRule
from openpyxl.styles import Alignment, Border, Font, NamedStyle, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

log = logging.getLogger(__name__)

_THIN = Side(border_style="thin", color="000000")
_BORDER = Border(left=_THIN, right=_THIN, top=_THIN, bottom=_THIN)
_CENTER = Alignment(horizontal="center", vertical="center")


def _header_style() -> NamedStyle:
    style = NamedStyle(name="table_header")
    style.font = Font(bold=True, color="FFFFFF")
    style.fill = PatternFill("solid", fgColor="2F5597")
    style.alignment = _CENTER
    style.border = _BORDER
    return style


def _title(ws: Worksheet, text: str, width: int) -> None:
    ws.merge_cells(start_row=1, start_column=1, end_row=1, end_column=width)
    ws["A1"] = text
    ws["A1"].font = Font(bold=True, size=14, color="FFFFFF")
    ws["A1"].alignment = _CENTER
    ws["A1"].fill = PatternFill("solid", fgColor="4F81BD")
    ws.row_dimensions[1].height = 28


def _table(ws: Worksheet, header: list[str], rows: list[list[Any]], start_row: int = 3) -> None:
    for col, name in enumerate(header, start=1):
        cell = ws.cell(row=start_row, column=col, value=name)
        cell.style = "table_header"
    for r, values in enumerate(rows, start=start_row + 1):
        for col, value in enumerate(values, start=1):
            cell = ws.cell(row=r, column=col, value=value)
            cell.border = _BORDER
            if isinstance(value, float):
                cell.number_format = "0.00"
                cell.alignment = _CENTER
    ws.freeze_panes = ws.cell(row=start_row + 1, column=1).coordinate


def _autosize(ws: Worksheet) -> None:
    for col in ws.iter_cols(min_row=2):
        longest = max((len(str(c.value)) for c in col if c.value is not None), default=0)
        ws.column_dimensions[get_column_letter(col[0].column)].width = min(longest + 2, 60)


def mad_rows(results: Mapping[str, Any]) -> tuple[list[str], list[list[Any]]]:
    targets = [str(t) for t in results.get("apcer_targets", [])]
    header = ["Algorithm", "Alpha", "Train bin", "Test bin", "Dev D-EER (%)", "Test D-EER (%)"]
    header += [f"BPCER @ APCER={t}%" for t in targets]
    rows = []
    for entry in results.get("mad", []):
        row = [
            entry["algorithm"], entry["alpha"], results.get("train_bin", ""), results.get("test_bin", ""),
            float(entry["dev_eer"]), float(entry["test_eer"]),
        ]
        row += [float(entry["bpcer_at_apcer"][t]) for t in targets]
        rows.append(row)
    return header, rows


def vulnerability_rows(results: Mapping[str, Any]) -> tuple[list[str], list[list[Any]]]:
    header = ["Bin", "Alpha", "FMMPMR (%)", "MMPMR (%)", "Morphs", "Attempts"]
    rows = []
    for bin_label, report in sorted(results.get("vulnerability", {}).items()):
        for alpha, b in report["per_alpha"].items():
            rows.append([bin_label, alpha, float(b["fmmpmr_percent"]), float(b["mmpmr_percent"]), b["morphs"], b["attempts"]])
        rows.append([bin_label, "all", float(report["fmmpmr_percent"]), float(report["mmpmr_percent"]),
                     report["metadata"]["morphs"], report["metadata"]["attempts"]])
    return header, rows


def export_results_workbook(results: Mapping[str, Any], path: str | Path) -> Path:
    """
    Results workbook: MAD error rates per algorithm and alpha, and the
    vulnerability rates per bin and alpha. Test D-EER at or above 50% is
    highlighted.
    """
    path = Path(path)
    wb = Workbook()
    if "table_header" not in wb.named_styles:
        wb.add_named_style(_header_style())

    ws = wb.active
    ws.title = "MAD results"
    header, rows = mad_rows(results)
    _title(ws, f"MAD results ({results.get('mode', 'intra')})", len(header))
    _table(ws, header, rows)
    if rows:
        column = get_column_letter(header.index("Test D-EER (%)") + 1)
        ws.conditional_formatting.add(
            f"{column}4:{column}{3 + len(rows)}",
            CellIsRule(operator="greaterThanOrEqual", formula=["50"], fill=PatternFill("solid", fgColor="F8CBAD")),
        )
    _autosize(ws)

    vs = wb.create_sheet("Vulnerability")
    header, rows = vulnerability_rows(results)
    _title(vs, f"Vulnerability ({results.get('comparator', '')})", len(header))
    _table(vs, header, rows)
    _autosize(vs)

    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    log.info("📗 Workbook written: %s", path)
    return path
