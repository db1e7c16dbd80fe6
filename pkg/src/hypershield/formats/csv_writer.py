"""Functions for writing tables to csv files"""

from typing import List

import pandas as pd
import xarray as xr

from hypershield.formats.interfaces import ExportInput, Table


def header_lines(table: Table, title: str = "") -> List[str]:
    """Comment lines naming the title and the unit of every column."""
    lines = [f"# {title}"] if title else []
    if isinstance(table, xr.DataArray):
        unit = table.attrs.get("units")
        if unit:
            lines.append(f"# {table.name or 'value'} [{unit}]")
        for dim in table.dims:
            dim_unit = table[dim].attrs.get("units") if dim in table.coords else None
            if dim_unit:
                lines.append(f"# {dim} [{dim_unit}]")
        return lines

    for name, variable in table.variables.items():
        unit = variable.attrs.get("units")
        if unit:
            lines.append(f"# {name} [{unit}]")
    return lines


def to_frame(table: Table) -> pd.DataFrame:
    """A pandas view of the table; 2D arrays keep their matrix layout."""
    if isinstance(table, xr.DataArray):
        if table.ndim == 2:
            return table.to_pandas()
        return table.to_dataframe(name=table.name or "value")
    return table.to_dataframe()


def write_csv_file(export: ExportInput):
    """Writes the table as csv with `#` comment lines stating title and units.

    Args:
        export (ExportInput): The output filename, table and title.
    """
    with open(export.output, "w", encoding="utf-8", newline="") as csv_file:
        for line in header_lines(export.table, export.title):
            csv_file.write(f"{line}\n")
        to_frame(export.table).to_csv(csv_file, lineterminator="\n")
