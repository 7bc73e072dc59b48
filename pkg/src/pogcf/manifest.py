"""Append-only flat-file record of completed runs."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class ManifestEntry:
    config_hash: str
    report_path: str  # "-" when the run produced no report
    checkpoint_path: str


class ExperimentManifest:
    """One TSV line per run: ``hash<TAB>report<TAB>checkpoint``.

    Entries are only appended; re-registering an identical row is a no-op,
    and a hash may not reappear with different paths.
    """

    def __init__(self, path):
        self.path = path

    def entries(self) -> list[ManifestEntry]:
        if not os.path.exists(self.path):
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line:
                    h, r, c = line.split("\t")
                    out.append(ManifestEntry(h, r, c))
        return out

    def register(self, config_hash: str, report_path: str | None,
                 checkpoint_path: str) -> None:
        report = report_path or "-"
        for p in (report, checkpoint_path):
            if p != "-" and not os.path.exists(p):
                raise FileNotFoundError(f"manifest entry file missing: {p}")
        entry = ManifestEntry(config_hash, report, checkpoint_path)
        for existing in self.entries():
            if existing.config_hash == config_hash:
                if existing == entry:
                    return
                raise ValueError(
                    f"hash {config_hash[:12]} already registered with different paths"
                )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(f"{entry.config_hash}\t{entry.report_path}\t{entry.checkpoint_path}\n")
