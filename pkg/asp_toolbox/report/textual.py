# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import logging
from collections import OrderedDict
from typing import List, Mapping, Optional

import colored

from asp_toolbox.util import format_dict, plain

log = logging.getLogger(__name__)

# Record fields naming an outcome, highlighted in the listing.
OUTCOME_FIELDS = ["verdict", "membership", "bounded", "within_bound", "certified", "ok"]

BAD_OUTCOMES = ["fail", "outside", False]


class TextualReport:
    """
    Human readable listing of records, followed by an optional summary.
    """

    def __init__(self, kind: str, verbose: bool = False):
        self.kind = kind
        self.verbose = verbose

    def render(self, records: List, summary: Optional[Mapping] = None) -> str:
        records = plain(records)
        lines = ["=" * 42, f"{_s(self.kind.capitalize())}: {_m(len(records))} records.", "=" * 42]
        for number, record in enumerate(records, start=1):
            lines.append("")
            lines.append(_ssb(f"#{number}"))
            lines.append(format_dict(self.highlight(record)))
        if summary:
            lines.append("")
            lines.append(_ssb("Summary"))
            lines.append(format_dict(OrderedDict((_k(key), _v(value)) for key, value in plain(summary).items())))
        return "\n".join(lines)

    def highlight(self, record: Mapping) -> OrderedDict:
        output = OrderedDict()
        for key, value in record.items():
            if key in OUTCOME_FIELDS:
                value = _bad(value) if value in BAD_OUTCOMES else _good(value)
            elif not self.verbose and isinstance(value, float):
                value = f"{value:.12g}"
            output[_k(key)] = value
        return output


bold_style = colored.attr("bold")
section_style = colored.fg("cyan") + bold_style
subsection_style = colored.fg("magenta")
key_style = colored.fg("blue") + bold_style
match_style = colored.fg("yellow") + bold_style
value_style = colored.fg("white") + bold_style
good_style = colored.fg("green") + bold_style
bad_style = colored.fg("red") + bold_style


def _s(text):
    return colored.stylize(str(text), section_style)


def _ssb(text):
    return colored.stylize(str(text), subsection_style + bold_style)


def _k(text):
    return colored.stylize(str(text), key_style)


def _m(text):
    return colored.stylize(str(text), match_style)


def _v(text):
    return colored.stylize(str(text), value_style)


def _good(text):
    return colored.stylize(str(text), good_style)


def _bad(text):
    return colored.stylize(str(text), bad_style)
