"""Interfaces for function communication"""

from dataclasses import dataclass
from typing import Union

import xarray as xr

Table = Union[xr.Dataset, xr.DataArray]


@dataclass
class ExportInput:
    """Inputs for the writer functions"""

    output: str
    table: Table
    title: str = ""
