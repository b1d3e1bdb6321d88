"""Raw log ingestion (LogHub BGL layout) and the parsed-CSV interchange files."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError

log = logging.getLogger(__name__)

NORMAL_LABEL = "-"
# BGL: label, epoch seconds, then date, node, time, node, type, component, level
HEADER_FIELDS = 7


@dataclass(frozen=True)
class RawLogLine:
    label_field: str
    timestamp: int
    content: str

    def __post_init__(self):
        if not self.label_field:
            raise DataError("label field must be non-empty")

    @property
    def is_alert(self) -> bool:
        return self.label_field != NORMAL_LABEL

    @property
    def tokens(self) -> list[str]:
        return self.content.split()


def parse_line(line: str, line_no: int, header_fields: int = HEADER_FIELDS) -> RawLogLine | None:
    """Split one record; returns ``None`` for blank lines.

    A timestamp that is not an integer falls back to ``line_no`` so the
    record keeps its file position as ordering key.
    """
    parts = line.split(None, 2 + header_fields)
    if not parts:
        return None
    label = parts[0]
    ts = line_no
    if len(parts) > 1:
        try:
            ts = int(parts[1])
        except ValueError:
            log.debug("line %d: unparsable timestamp %r", line_no, parts[1])
    content = parts[2 + header_fields] if len(parts) > 2 + header_fields else ""
    return RawLogLine(label, ts, content.strip())


def read_raw_log(path, header_fields: int = HEADER_FIELDS) -> list[RawLogLine]:
    """Records in chronological order (by timestamp, or file order as fallback)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"log file not found: {path}")
    out = []
    all_stamped = True
    with path.open(encoding="utf-8", errors="replace") as fh:
        for i, line in enumerate(fh):
            rec = parse_line(line, i, header_fields)
            if rec is not None:
                out.append(rec)
                parts = line.split(None, 2)
                all_stamped = all_stamped and len(parts) > 1 and parts[1].lstrip("-").isdigit()
    if all_stamped:
        # stable: equal timestamps keep file order
        out.sort(key=lambda r: r.timestamp)
    else:
        log.warning("%s: some timestamps unparsable; ordering by line number", path)
    return out


# -- parsed interchange files ----------------------------------------------


def write_parsed_csv(path, labels, event_ids) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_index", "label", "event_id"])
        for i, (lab, eid) in enumerate(zip(labels, event_ids)):
            w.writerow([i, int(lab), int(eid)])


def read_parsed_csv(path) -> tuple[list[int], list[int]]:
    """Returns ``(alert_flags, event_ids)`` ordered by ``origin_index``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"parsed file not found: {path}")
    rows = []
    with path.open(encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"origin_index", "label", "event_id"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            try:
                lab = rec["label"].strip()
                flag = 0 if lab in ("0", NORMAL_LABEL) else 1
                rows.append((int(rec["origin_index"]), flag, int(rec["event_id"])))
            except ValueError as exc:
                raise DataError(f"{path}: bad row {rec}") from exc
    rows.sort()
    return [r[1] for r in rows], [r[2] for r in rows]


def write_templates(path, templates) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in templates:
            fh.write(f"{t.template_id}\t{t.pattern}\n")


def read_templates(path) -> dict[int, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            tid, _, pattern = line.partition("\t")
            out[int(tid)] = pattern
    return out
