"""Append-only on-disk cache of limiting-constant estimates.

One JSON record per line; each line carries a sha256-prefix checksum of its
own payload so that truncated or hand-edited lines are detected and skipped
with a warning instead of silently poisoning later runs.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .constants import ConstantKey, ConstantValue

__all__ = ["ConstantCache"]

_KEY_FIELDS = ("kind", "eta", "trunc", "n_samples", "seed", "a", "T", "k")


def _checksum(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _key_tuple(key: "ConstantKey"):
    return tuple(getattr(key, f) for f in _KEY_FIELDS)


class ConstantCache:
    """Single-writer, many-reader line cache keyed by the full ConstantKey."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[tuple, "ConstantValue"] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        from .constants import ConstantValue

        for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                stored = rec.pop("checksum")
                if stored != _checksum(rec):
                    raise ValueError("checksum mismatch")
            except (ValueError, KeyError) as exc:
                warnings.warn(
                    f"{self.path}:{lineno}: skipping corrupt cache line ({exc})",
                    stacklevel=2,
                )
                continue
            key = tuple(rec[f] for f in _KEY_FIELDS)
            self._records[key] = ConstantValue(
                estimate=rec["estimate"],
                std_error=rec["std_error"],
                boundary_fraction=rec["boundary_fraction"],
                n=rec["n_samples"],
            )

    def lookup(self, key: "ConstantKey"):
        return self._records.get(_key_tuple(key))

    def append(self, key: "ConstantKey", value: "ConstantValue") -> None:
        rec = dict(zip(_KEY_FIELDS, _key_tuple(key)))
        rec.update(
            estimate=value.estimate,
            std_error=value.std_error,
            boundary_fraction=value.boundary_fraction,
            timestamp=time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        )
        rec["checksum"] = _checksum(rec)
        with self.path.open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        self._records[_key_tuple(key)] = value

    def __len__(self) -> int:
        return len(self._records)
