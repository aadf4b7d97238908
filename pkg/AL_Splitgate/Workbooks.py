""" AL_Splitgate.Workbooks

    Spreadsheet input/output built on openpyxl: report tables are written as Excel Tables with
    fitted column widths, and prediction tables are read back as lists of dicts.
"""
## Super Module
from openpyxl import Workbook, load_workbook, utils
from openpyxl.worksheet.table import Table, TableStyleInfo
from openpyxl.worksheet.worksheet import Worksheet
## Builtin
import pathlib
import re
import typing

__all__ = ["headerkey", "columnwidth", "fitcolumn", "add_table", "write_tables", "read_table"]

def headerkey(header)-> str:
    """ Default read_table key: runs of whitespace become one underscore, lowercased ("True Label" -> "true_label") """
    return "_".join(str(header).split()).lower()

def columnwidth(worksheet: Worksheet, column: int|str, start_row: int|None = None, end_row: int|None = None)-> int:
    """ Longest rendered value (in characters) of a column between start_row and end_row inclusive.

        column is a 1-based index or a letter. Cells inside merged ranges do not count.
    """
    index = utils.column_index_from_string(column) if isinstance(column, str) else column
    first, last = start_row or 1, end_row or worksheet.max_row
    if last < first:
        raise ValueError(f"Row range is empty: {first}..{last}")
    cells = (row[0] for row in worksheet.iter_rows(min_row = first, max_row = last, min_col = index, max_col = index))
    return max((len(str(cell.value)) for cell in cells
                if cell.value is not None and cell.coordinate not in worksheet.merged_cells), default = 0)

def fitcolumn(worksheet: Worksheet, column: int|str, padding: int = 2)-> None:
    """ Widens the column to its longest value plus padding """
    letter = utils.get_column_letter(column) if isinstance(column, int) else column
    worksheet.column_dimensions[letter].width = columnwidth(worksheet, letter) + padding

## Excel table names: a letter or underscore, then letters, digits, underscores or dots
TABLENAMERE = re.compile(r"[^A-Za-z0-9_.]")

def add_table(worksheet: Worksheet, name: str, headers: list[str], rows: list[list], start_row: int = 1)-> Table:
    """ Writes headers and rows starting at column A of start_row and registers them as an Excel Table """
    if not headers: raise ValueError("A table needs at least one header")
    for offset, values in enumerate([headers] + rows):
        if len(values) != len(headers):
            raise ValueError(f"Row {offset} has {len(values)} values; expected {len(headers)}")
        for column, value in enumerate(values, start = 1):
            worksheet.cell(start_row + offset, column, value)
    ref = f"A{start_row}:{utils.get_column_letter(len(headers))}{start_row + max(len(rows), 1)}"
    displayname = TABLENAMERE.sub("_", name)
    if not displayname[0].isalpha() and displayname[0] != "_": displayname = "_" + displayname
    table = Table(displayName = displayname, ref = ref)
    table.tableStyleInfo = TableStyleInfo(name = "TableStyleMedium2", showRowStripes = True)
    worksheet.add_table(table)
    for column in range(1, len(headers) + 1):
        fitcolumn(worksheet, column)
    return table

def write_tables(path: pathlib.Path|str, tables: typing.Sequence[tuple[str, list[str], list[list]]])-> None:
    """ Saves a workbook with one worksheet per (name, headers, rows) table """
    workbook = Workbook()
    workbook.remove(workbook.active)
    for name, headers, rows in tables:
        worksheet = workbook.create_sheet(title = name[:31])
        add_table(worksheet, name, headers, rows)
    workbook.save(str(path))

def read_table(path: pathlib.Path|str, name: str|None = None, keyfactory: typing.Callable = headerkey)-> list[dict]:
    """ Reads a table of the workbook as a list of dicts keyed by (keyfactory-processed) headers.

        name selects an Excel Table by displayName; otherwise the first Table found is used, and
        a workbook without Tables falls back to the used range of its first worksheet.
    """
    workbook = load_workbook(str(path), data_only = True)
    found = None
    for worksheet in workbook.worksheets:
        for table in worksheet.tables.values():
            if name is None or table.displayName == name:
                found = (worksheet, table.ref)
                break
        if found: break
    if found is None:
        if name is not None: raise ValueError(f'Workbook has no table named "{name}"')
        worksheet = workbook.worksheets[0]
        rows = [list(row) for row in worksheet.iter_rows(values_only = True)]
    else:
        worksheet, ref = found
        rows = [[cell.value for cell in row] for row in worksheet[ref]]
    if not rows: return []
    headers = [keyfactory(key) for key in rows[0]]
    return [dict(zip(headers, row)) for row in rows[1:] if any(value is not None for value in row)]
