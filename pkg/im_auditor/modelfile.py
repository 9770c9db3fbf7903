"""
Model file and IM table file formats.

A model file is a flat, line-oriented document:

    [frames]
    data = y1 y2 y3
    param = t1 t2 t3

    [likelihood]
    # one row per data label, one column per parameter label
    y1 = 0.8 0.1 0.1

    [prior]
    t1 t2 = 0.9
    * = 0.1

    [interval-prior]
    -inf 7 = 0.9
    -inf inf = 0.1

Numbers are decimal strings (``p/q`` fractions are accepted too) and ``#``
starts a comment. IM tables are long CSV files with columns
``data,hypothesis,lower``; the hypothesis is a space-separated label list,
``{}`` for the empty set.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from im_auditor.belief import MASS_TOLERANCE, Frame, MassFunction, Number, format_number
from im_auditor.credal import CredalModel, Likelihood
from im_auditor.imtable import IMTable, IMTableError
from im_auditor.randomset import FocalShapeError, IntervalPrior

SECTIONS = ("frames", "likelihood", "prior", "interval-prior")
FULL_FRAME_TOKEN = "*"
EMPTY_HYPOTHESIS = "{}"
IM_TABLE_COLUMNS = ["data", "hypothesis", "lower"]
RESERVED_LABEL_CHARS = re.compile(r"[\s=#\[\]]")

PathLike = Union[str, Path]


class ModelParseError(ValueError):
    def __init__(
        self,
        message: str,
        *,
        code: str,
        line: int = 1,
        column: int = 1,
        section: str | None = None,
    ) -> None:
        where = f"line {line}, column {column}"
        if section:
            where += f" [{section}]"
        super().__init__(f"{where}: {message}")
        self.code = code
        self.line = line
        self.column = column
        self.section = section


@dataclass(frozen=True)
class _Entry:
    line: int
    key: list[tuple[str, int]]
    value: list[tuple[str, int]]


@dataclass
class _Section:
    name: str
    line: int
    entries: list[_Entry] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class ModelBundle:
    data_frame: Frame | None = None
    param_frame: Frame | None = None
    likelihood: Likelihood | None = None
    prior: MassFunction | None = None
    interval_prior: IntervalPrior | None = None

    def credal_model(self) -> CredalModel:
        if self.likelihood is None or self.prior is None:
            missing = [name for name, item in (("likelihood", self.likelihood), ("prior", self.prior)) if item is None]
            raise ModelParseError(
                f"A credal model needs both [likelihood] and [prior]; missing: {', '.join(missing)}",
                code="malformed_section",
            )
        return CredalModel(self.likelihood, self.prior)


def _tokens(text: str, offset: int) -> list[tuple[str, int]]:
    return [(match.group(0), offset + match.start() + 1) for match in re.finditer(r"\S+", text)]


def _split_sections(text: str) -> dict[str, _Section]:
    sections: dict[str, _Section] = {}
    current: _Section | None = None
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        stripped = content.strip()
        if not stripped:
            continue
        column = len(content) - len(content.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ModelParseError("Section header is missing its closing ']'", code="malformed_section", line=number, column=column)
            name = stripped[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ModelParseError(
                    f"Unknown section '{name}'. Known sections: {', '.join(SECTIONS)}",
                    code="malformed_section", line=number, column=column,
                )
            if name in sections:
                raise ModelParseError(f"Section '{name}' appears twice", code="malformed_section", line=number, column=column, section=name)
            current = sections[name] = _Section(name, number)
            continue
        if current is None:
            raise ModelParseError("Entry appears before any section header", code="malformed_section", line=number, column=column)
        if "=" not in content:
            raise ModelParseError("Expected 'key = value'", code="malformed_section", line=number, column=column, section=current.name)
        key, value = content.split("=", 1)
        current.entries.append(_Entry(number, _tokens(key, 0), _tokens(value, len(key) + 1)))
    if not sections:
        raise ModelParseError("The document contains no sections", code="empty_document")
    return sections


def _number(token: str, column: int, line: int, section: str, *, exact: bool) -> Number:
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ModelParseError(f"'{token}' is not a decimal number", code="bad_number", line=line, column=column, section=section) from None
    return value if exact else float(value)


def _bound(token: str, column: int, line: int) -> float:
    lowered = token.lower()
    if lowered in ("-inf", "-infinity"):
        return -math.inf
    if lowered in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    return float(_number(token, column, line, "interval-prior", exact=True))


def _parse_frames(section: _Section) -> tuple[Frame | None, Frame | None]:
    frames: dict[str, Frame] = {}
    for entry in section.entries:
        if len(entry.key) != 1 or entry.key[0][0] not in ("data", "param"):
            column = entry.key[0][1] if entry.key else 1
            raise ModelParseError("Frame entries are 'data = ...' or 'param = ...'", code="malformed_section",
                                  line=entry.line, column=column, section="frames")
        name = entry.key[0][0]
        if name in frames:
            raise ModelParseError(f"Frame '{name}' is defined twice", code="malformed_section",
                                  line=entry.line, column=entry.key[0][1], section="frames")
        labels = [token for token, _ in entry.value]
        try:
            frames[name] = Frame(tuple(labels))
        except ValueError as exc:
            column = entry.value[0][1] if entry.value else entry.key[0][1]
            raise ModelParseError(str(exc), code="malformed_section", line=entry.line, column=column, section="frames") from None
    return frames.get("data"), frames.get("param")


def _label_index(frame: Frame, token: str, column: int, line: int, section: str) -> int:
    if token not in frame.labels:
        raise ModelParseError(f"Unknown label '{token}'", code="unknown_label", line=line, column=column, section=section)
    return frame.labels.index(token)


def _parse_likelihood(section: _Section, data_frame: Frame, param_frame: Frame) -> Likelihood:
    table = np.full((data_frame.size, param_frame.size), np.nan)
    for entry in section.entries:
        if len(entry.key) != 1:
            column = entry.key[1][1] if len(entry.key) > 1 else 1
            raise ModelParseError("Each likelihood row is keyed by one data label", code="malformed_section",
                                  line=entry.line, column=column, section=section.name)
        label, column = entry.key[0]
        row = _label_index(data_frame, label, column, entry.line, section.name)
        if not np.all(np.isnan(table[row])):
            raise ModelParseError(f"Row '{label}' appears twice", code="malformed_section", line=entry.line, column=column, section=section.name)
        if len(entry.value) != param_frame.size:
            raise ModelParseError(
                f"Row '{label}' has {len(entry.value)} values, expected {param_frame.size}",
                code="malformed_section", line=entry.line, column=column, section=section.name,
            )
        for index, (token, token_column) in enumerate(entry.value):
            value = float(_number(token, token_column, entry.line, section.name, exact=False))
            if value < 0.0:
                raise ModelParseError(f"Probability {token} is negative", code="non_stochastic",
                                      line=entry.line, column=token_column, section=section.name)
            table[row, index] = value
    missing = [data_frame.labels[i] for i in range(data_frame.size) if np.all(np.isnan(table[i]))]
    if missing:
        raise ModelParseError(f"Missing likelihood rows for: {', '.join(missing)}", code="malformed_section",
                              line=section.line, section=section.name)
    sums = table.sum(axis=0)
    bad = [f"{param_frame.labels[i]} ({sums[i]:.15g})" for i in range(param_frame.size) if abs(sums[i] - 1.0) > MASS_TOLERANCE]
    if bad:
        raise ModelParseError(f"Likelihood columns do not sum to 1: {', '.join(bad)}", code="non_stochastic",
                              line=section.line, section=section.name)
    return Likelihood(data_frame, param_frame, table)


def _mass(entry: _Entry, section: str, exact: bool) -> Number:
    if len(entry.value) != 1:
        column = entry.value[1][1] if len(entry.value) > 1 else 1
        raise ModelParseError("Expected exactly one mass after '='", code="malformed_section", line=entry.line, column=column, section=section)
    token, column = entry.value[0]
    mass = _number(token, column, entry.line, section, exact=exact)
    if not mass > 0:
        raise ModelParseError(f"Mass {token} must be positive", code="bad_number", line=entry.line, column=column, section=section)
    return mass


def _check_mass_sum(total: Number, section: _Section) -> None:
    if not section.entries:
        raise ModelParseError("Section has no focal entries", code="malformed_section", line=section.line, section=section.name)
    if abs(total - 1) > MASS_TOLERANCE:
        raise ModelParseError(f"Masses sum to {float(total):.15g}, expected 1", code="mass_sum", line=section.line, section=section.name)


def _parse_prior(section: _Section, param_frame: Frame, exact: bool) -> MassFunction:
    focal: dict[int, Number] = {}
    total: Number = 0
    for entry in section.entries:
        if not entry.key:
            raise ModelParseError("Focal set has no members", code="malformed_section", line=entry.line, section=section.name)
        if [token for token, _ in entry.key] == [FULL_FRAME_TOKEN]:
            mask = param_frame.full_mask
        else:
            mask = 0
            for token, column in entry.key:
                mask |= 1 << _label_index(param_frame, token, column, entry.line, section.name)
        if mask in focal:
            raise ModelParseError("Focal set appears twice", code="malformed_section",
                                  line=entry.line, column=entry.key[0][1], section=section.name)
        focal[mask] = _mass(entry, section.name, exact)
        total += focal[mask]
    _check_mass_sum(total, section)
    return MassFunction(param_frame, tuple(focal.items()))


def _parse_interval_prior(section: _Section, exact: bool) -> IntervalPrior:
    focal = []
    total: Number = 0
    for entry in section.entries:
        if len(entry.key) != 2:
            raise ModelParseError("Interval entries are 'lower upper = mass'", code="malformed_section",
                                  line=entry.line, column=entry.key[0][1] if entry.key else 1, section=section.name)
        lo = _bound(*entry.key[0], entry.line)
        hi = _bound(*entry.key[1], entry.line)
        mass = _mass(entry, section.name, exact)
        focal.append((lo, hi, mass))
        total += mass
    _check_mass_sum(total, section)
    try:
        return IntervalPrior(tuple(focal))
    except FocalShapeError as exc:
        raise ModelParseError(str(exc), code="focal_shape", line=section.line, section=section.name) from None


def parse_model(text: str, *, exact: bool = False) -> ModelBundle:
    if not text.strip():
        raise ModelParseError("The document is empty", code="empty_document")
    sections = _split_sections(text)
    data_frame = param_frame = None
    if "frames" in sections:
        data_frame, param_frame = _parse_frames(sections["frames"])
    likelihood = prior = interval_prior = None
    if "likelihood" in sections:
        if data_frame is None or param_frame is None:
            raise ModelParseError("[likelihood] needs both data and param frames", code="malformed_section",
                                  line=sections["likelihood"].line, section="likelihood")
        likelihood = _parse_likelihood(sections["likelihood"], data_frame, param_frame)
    if "prior" in sections:
        if param_frame is None:
            raise ModelParseError("[prior] needs a param frame", code="malformed_section",
                                  line=sections["prior"].line, section="prior")
        prior = _parse_prior(sections["prior"], param_frame, exact)
    if "interval-prior" in sections:
        interval_prior = _parse_interval_prior(sections["interval-prior"], exact)
    return ModelBundle(data_frame, param_frame, likelihood, prior, interval_prior)


def _check_labels(frame: Frame) -> None:
    for label in frame.labels:
        if RESERVED_LABEL_CHARS.search(label) or label in (FULL_FRAME_TOKEN, EMPTY_HYPOTHESIS):
            raise ValueError(f"Label '{label}' cannot be written to a model file")


def _format_bound(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format_number(value)


def serialize_model(bundle: ModelBundle) -> str:
    lines = ["# im-auditor model"]
    if bundle.data_frame is not None or bundle.param_frame is not None:
        lines += ["", "[frames]"]
        for name, frame in (("data", bundle.data_frame), ("param", bundle.param_frame)):
            if frame is not None:
                _check_labels(frame)
                lines.append(f"{name} = {' '.join(frame.labels)}")
    if bundle.likelihood is not None:
        lines += ["", "[likelihood]"]
        for label, row in zip(bundle.likelihood.data_frame.labels, bundle.likelihood.table):
            lines.append(f"{label} = {' '.join(format_number(float(value)) for value in row)}")
    if bundle.prior is not None:
        lines += ["", "[prior]"]
        for subset, mass in bundle.prior.entries:
            members = FULL_FRAME_TOKEN if subset.mask == subset.frame.full_mask else " ".join(subset.members)
            lines.append(f"{members} = {format_number(mass)}")
    if bundle.interval_prior is not None:
        lines += ["", "[interval-prior]"]
        for lo, hi, mass in bundle.interval_prior.focal:
            lines.append(f"{_format_bound(lo)} {_format_bound(hi)} = {format_number(mass)}")
    return "\n".join(lines) + "\n"


def decode_model_bytes(raw: bytes) -> str:
    """UTF-8 first; otherwise the chardet guess, falling back to latin-1."""
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        pass
    import chardet

    detected = chardet.detect(raw).get("encoding") or "latin-1"
    try:
        return raw.decode(detected)
    except (LookupError, UnicodeDecodeError):
        return raw.decode("latin-1")


def read_model_file(path: PathLike, *, exact: bool = False) -> ModelBundle:
    return parse_model(decode_model_bytes(Path(path).read_bytes()), exact=exact)


def im_table_frame(im: IMTable) -> pd.DataFrame:
    rows = []
    for row, y in enumerate(im.data_frame.labels):
        for mask in range(1 << im.param_frame.size):
            rows.append({"data": y, "hypothesis": im.hypothesis_label(mask), "lower": format_number(float(im.lower[row, mask]))})
    return pd.DataFrame(rows, columns=IM_TABLE_COLUMNS)


def write_im_table(im: IMTable, path: PathLike) -> None:
    _check_labels(im.data_frame)
    _check_labels(im.param_frame)
    im_table_frame(im).to_csv(path, index=False, lineterminator="\n")


def read_im_table(path: PathLike, data_frame: Frame, param_frame: Frame, *, source: str = "file") -> IMTable:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(frame.columns) != IM_TABLE_COLUMNS:
        raise ModelParseError(f"IM table columns must be {','.join(IM_TABLE_COLUMNS)}", code="malformed_section", section="im-table")
    lower = np.full((data_frame.size, 1 << param_frame.size), np.nan)
    for offset, record in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        row = _label_index(data_frame, record.data, 1, line, "im-table")
        mask = 0
        if record.hypothesis.strip() != EMPTY_HYPOTHESIS:
            for token, column in _tokens(record.hypothesis, 0):
                mask |= 1 << _label_index(param_frame, token, column, line, "im-table")
        if not np.isnan(lower[row, mask]):
            raise ModelParseError(
                f"Duplicate entry for data {record.data.strip()!r} and hypothesis {record.hypothesis.strip()!r}",
                code="invalid_table",
                line=line,
                section="im-table",
            )
        lower[row, mask] = float(_number(record.lower.strip(), 1, line, "im-table", exact=False))
    if np.any(np.isnan(lower)):
        raise ModelParseError("IM table does not cover every (data, hypothesis) pair", code="incomplete_table", section="im-table")
    try:
        return IMTable(data_frame, param_frame, lower, source=source)
    except IMTableError as exc:
        raise ModelParseError(str(exc), code="invalid_table", section="im-table") from None
