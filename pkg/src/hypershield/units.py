"""A pint unit registry for hypershield"""

from typing import Union

from pint import UnitRegistry

ureg = UnitRegistry()  # type: ignore

QuantityLike = Union[str, float, int]


def to_si(value: QuantityLike, unit: str = "") -> float:
    """Converts a number or a pint quantity string into a SI base magnitude.

    Plain numbers are interpreted in `unit` (SI when empty). Strings such as
    "5 deg" or "8 km" carry their own unit and are converted to radians or
    meters respectively.

    Args:
        value (QuantityLike): The number or quantity string.
        unit (str, optional): Unit of plain numbers. Defaults to "" (SI).

    Returns:
        float: The magnitude in SI base units.
    """
    if isinstance(value, str):
        quantity = ureg(value)
        if not hasattr(quantity, "to_base_units"):
            return float(quantity)
        return float(quantity.to_base_units().magnitude)

    if unit:
        return float((value * ureg(unit)).to_base_units().magnitude)
    return float(value)
