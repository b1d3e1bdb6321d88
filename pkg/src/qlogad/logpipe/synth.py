"""Synthetic BGL-format corpora with known ground truth.

Normal traffic cycles through ``n_normal`` templates in a fixed order.
A fraction of windows receives one burst of alert lines (foreign
templates with a non ``-`` label); the normal cycle resumes after the
burst.  Every template has a distinct first token and its variable
fields contain digits, so Drain recovers exactly one template per
pattern.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError

NORMAL_PATTERNS = (
    "instruction cache parity error corrected on core {a}",
    "generating core.{a}",
    "ciod: Message code {a} is not {b} or 4294967295",
    "total of {a} ddr error(s) detected and corrected",
    "CE sym {a}, at 0x{h}, mask 0x{b}",
    "program interrupt: fp cr field {a} set",
    "data TLB error interrupt on {h}",
    "ddr: activating redundant bit steering for next allocation: rank={a} symbol={b}",
    "idoproxydb hit ASSERT condition: ASSERT expression={a}",
    "shutdown complete for partition R{a}-M{b}",
    "floating point alignment exceptions {a} seen",
    "external input interrupt (unit={a} bit={b}): uncorrectable torus error",
    "minus normalized number count {a}",
    "ciodb has been restarted at {h}",
    "node card vpd check: U{a} node in processor card slot J{b} do not match",
    "tree receiver {a} in re-synch state event(s) (dcr 0x{h}) detected",
)

ALERT_PATTERNS = (
    ("KERNDTLB", "dtlbfatal: data TLB error interrupt at 0x{h}"),
    ("KERNSTOR", "dstorfatal: data storage interrupt at 0x{h} rank {a}"),
    ("APPSEV", "ciostream: error reading message prefix to {a}.{b}.{a}.{b}:{b}"),
    ("KERNMNTF", "lustre: mount FAILED on bglio{a} at location {b}"),
)

# every pattern's leading token is unique, which keeps Drain leaves disjoint
_FIRST = [p.split()[0] for p in NORMAL_PATTERNS] + [p.split()[0] for _, p in ALERT_PATTERNS]
assert len(set(_FIRST)) == len(_FIRST)

_HEADER = "2005.06.03 R02-M1-N0-C:J12-U11 2005-06-03-15.42.50.675872 R02-M1-N0-C:J12-U11 RAS KERNEL INFO"


@dataclass
class SyntheticCorpus:
    path: Path
    n_lines: int
    window_size: int
    line_kinds: np.ndarray  # per line: normal template k >= 0, alert template -(k+1)
    window_labels: np.ndarray

    @property
    def alert_flags(self) -> np.ndarray:
        return (self.line_kinds < 0).astype(np.int64)

    @property
    def n_templates(self) -> int:
        return len(np.unique(self.line_kinds))


def generate_corpus(
    path,
    n_windows: int = 50,
    window_size: int = 100,
    n_normal: int = 9,
    n_alert: int = 3,
    anomaly_rate: float = 0.1,
    max_burst: int = 3,
    seed: int = 0,
    extra_lines: int = 0,
) -> SyntheticCorpus:
    """Write ``n_windows * window_size + extra_lines`` log lines to ``path``."""
    if not 1 <= n_normal <= len(NORMAL_PATTERNS):
        raise ConfigurationError(f"n_normal must lie in 1..{len(NORMAL_PATTERNS)}")
    if not 1 <= n_alert <= len(ALERT_PATTERNS):
        raise ConfigurationError(f"n_alert must lie in 1..{len(ALERT_PATTERNS)}")
    if not 0.0 <= anomaly_rate <= 1.0:
        raise ConfigurationError("anomaly_rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_lines = n_windows * window_size + extra_lines
    kinds = np.empty(n_lines, dtype=np.int64)
    anomalous = rng.random(n_windows) < anomaly_rate
    pos = 0
    for w in range(n_windows):
        lo = w * window_size
        burst = np.zeros(window_size, dtype=bool)
        if anomalous[w]:
            length = int(rng.integers(1, max_burst + 1))
            start = int(rng.integers(0, window_size - length + 1))
            burst[start : start + length] = True
        for j in range(window_size):
            if burst[j]:
                kinds[lo + j] = -(int(rng.integers(0, n_alert)) + 1)
            else:
                kinds[lo + j] = pos % n_normal
                pos += 1
    for j in range(n_windows * window_size, n_lines):
        kinds[j] = pos % n_normal
        pos += 1

    # variable fields are drawn up front; formatting is the only per-line work
    a = rng.integers(1, 10_000, n_lines)
    b = rng.integers(1, 100, n_lines)
    hx = rng.integers(1, 2**31, n_lines)
    ts = 1117838570 + np.cumsum(rng.integers(0, 2, n_lines))
    lines = []
    for j, k in enumerate(kinds):
        if k >= 0:
            label, pattern = "-", NORMAL_PATTERNS[k]
        else:
            label, pattern = ALERT_PATTERNS[-k - 1]
        content = pattern.format(a=a[j], b=b[j], h=f"{hx[j]:08x}")
        lines.append(f"{label} {ts[j]} {_HEADER} {content}\n")
    path = Path(path)
    path.write_text("".join(lines), encoding="utf-8")
    return SyntheticCorpus(path, n_lines, window_size, kinds, anomalous.astype(np.int64))
