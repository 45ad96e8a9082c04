"""
Output formatter module for frobound.

Renders reports as human tables, CSV or JSON. CSV and JSON go through pandas and are
byte-stable; colour is only used for tables on a terminal.
"""

import json
import sys

import pandas as pd
from colorama import Fore, Style
from colorama import init as colorama_init

from ..utils.helpers import format_valuation
from ..utils.logger import logger


class ResultsFormatter:
    """
    Formats command results for stdout.
    """

    def __init__(self, output_format="table", color=None):
        self.output_format = output_format
        self.color = sys.stdout.isatty() if color is None else color
        if self.color:
            colorama_init()

    def format_frame(self, frame: pd.DataFrame, highlight=None, alert=None, title=None):
        """
        Render a DataFrame.

        Args:
            frame: Table to render
            highlight: Boolean column whose true rows are shown in green
            alert: Boolean column whose true rows are shown in red
            title: Heading for the human table

        Returns:
            str: Rendered output ending in a newline
        """
        logger.debug(f"formatting {len(frame)} rows as {self.output_format}")
        if self.output_format == "csv":
            return frame.to_csv(index=False, lineterminator="\n")
        if self.output_format == "json":
            return frame.to_json(orient="records") + "\n"
        if frame.empty:
            return (f"{title}\n" if title else "") + "(no rows)\n"

        lines = frame.to_string(index=False).split("\n")
        out = [self._paint(title, Style.BRIGHT)] if title else []
        out.append(self._paint(lines[0], Style.BRIGHT))
        for (_, row), line in zip(frame.iterrows(), lines[1:]):
            if alert and bool(row[alert]):
                line = self._paint(line, Fore.RED)
            elif highlight and bool(row[highlight]):
                line = self._paint(line, Fore.GREEN)
            out.append(line)
        return "\n".join(out) + "\n"

    def format_records(self, records, **kwargs):
        return self.format_frame(pd.DataFrame.from_records(records), **kwargs)

    def format_mapping(self, data: dict, title=None):
        """Key/value output for single-object reports; CSV falls back to one row."""
        if self.output_format == "json":
            return json.dumps(data, sort_keys=True, default=str) + "\n"
        if self.output_format == "csv":
            return pd.DataFrame([{k: _cell(v) for k, v in data.items()}]).to_csv(index=False, lineterminator="\n")
        width = max((len(str(k)) for k in data), default=0)
        out = [self._paint(title, Style.BRIGHT)] if title else []
        for key, value in data.items():
            out.append(f"{str(key).ljust(width)}  {_cell(value)}")
        return "\n".join(out) + "\n"

    def format_error(self, error):
        message = str(error)
        return self._paint(f"Error: {message}", Fore.RED) + "\n"

    def _paint(self, text, style):
        if not self.color:
            return text
        return f"{style}{text}{Style.RESET_ALL}"


def _cell(value):
    if isinstance(value, float):
        return format_valuation(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_cell(v) for v in value) + "]"
    return str(value)
