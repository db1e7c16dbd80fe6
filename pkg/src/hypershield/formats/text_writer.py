"""Functions for writing tables as aligned plain text"""

from hypershield.formats.csv_writer import header_lines, to_frame
from hypershield.formats.interfaces import ExportInput


def write_text_file(export: ExportInput):
    """Writes the table as a fixed-width text block below its comment header."""
    frame = to_frame(export.table)
    with open(export.output, "w", encoding="utf-8") as text_file:
        for line in header_lines(export.table, export.title):
            text_file.write(f"{line}\n")
        text_file.write(frame.to_string())
        text_file.write("\n")
