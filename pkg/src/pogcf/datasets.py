"""TSV ingestion for per-behavior interaction logs.

Each behavior lives in its own UTF-8 TSV with columns
``user_id<TAB>item_id[<TAB>timestamp]`` and no header unless requested.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ParseError
from .graph import InteractionLog


def read_log(path, behavior: str, has_header: bool = False) -> InteractionLog:
    """Parse one behavior's TSV into an InteractionLog with raw ids."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    users: list[int] = []
    items: list[int] = []
    times: list[float] = []
    saw_times = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if has_header and line_no == 1:
                continue
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ParseError(path, line_no, f"expected 2 or 3 columns, got {len(parts)}")
            try:
                u, i = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, line_no, f"non-integer id in {line!r}") from None
            if u < 0 or i < 0:
                raise ParseError(path, line_no, "ids must be non-negative")
            has_ts = len(parts) == 3
            if saw_times is None:
                saw_times = has_ts
            elif saw_times != has_ts:
                raise ParseError(path, line_no, "inconsistent column count")
            if has_ts:
                try:
                    times.append(float(parts[2]))
                except ValueError:
                    raise ParseError(path, line_no, f"bad timestamp {parts[2]!r}") from None
            users.append(u)
            items.append(i)
    return InteractionLog(
        behavior,
        np.array(users, dtype=np.int64),
        np.array(items, dtype=np.int64),
        np.array(times) if saw_times else None,
    )


def load_behavior_logs(paths: dict[str, str], has_header: bool = False) -> list[InteractionLog]:
    """Read every behavior's TSV, in the order the mapping lists them."""
    return [read_log(p, behavior, has_header) for behavior, p in paths.items()]


def write_log_tsv(log: InteractionLog, path) -> None:
    """Inverse of :func:`read_log`, used by the synthetic generator."""
    with open(path, "w", encoding="utf-8") as fh:
        if log.times is None:
            for u, i in zip(log.users.tolist(), log.items.tolist()):
                fh.write(f"{u}\t{i}\n")
        else:
            for u, i, t in zip(log.users.tolist(), log.items.tolist(), log.times.tolist()):
                fh.write(f"{u}\t{i}\t{t:g}\n")
