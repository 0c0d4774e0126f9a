"""Time-tag file formats.

Binary: 8-byte magic ``HOMTAGS\\0``, little-endian uint32 version, then packed
17-byte records (uint8 channel, uint64 pulse index, int64 arrival offset in
femtoseconds). CSV mirror: header ``channel,pulse,offset_fs``.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .spectrometer import TAG_DTYPE, CoincidenceHistogram, TimeTags

MAGIC = b"HOMTAGS\x00"
VERSION = 1
_HEADER = struct.Struct("<8sI")


def write_tags(path, tags: TimeTags) -> Path:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION))
        fh.write(np.ascontiguousarray(tags.records, dtype=TAG_DTYPE).tobytes())
    return path


def read_tags(path, window_ps: float = 1e6 / 76.0) -> TimeTags:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidArgument(f"{path}: truncated header")
    magic, version = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidArgument(f"{path}: not a time-tag file")
    if version != VERSION:
        raise InvalidArgument(f"{path}: unsupported tag format version {version}")
    body = data[_HEADER.size :]
    if len(body) % TAG_DTYPE.itemsize:
        raise InvalidArgument(f"{path}: record stream is not a whole number of records")
    return TimeTags(np.frombuffer(body, dtype=TAG_DTYPE).copy(), window_ps)


def write_tags_csv(path, tags: TimeTags) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["channel", "pulse", "offset_fs"])
        for r in tags.records:
            out.writerow([int(r["channel"]), int(r["pulse"]), int(r["offset_fs"])])
    return path


def read_tags_csv(path, window_ps: float = 1e6 / 76.0) -> TimeTags:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    rec = np.empty(len(rows), dtype=TAG_DTYPE)
    for i, r in enumerate(rows):
        rec[i] = (int(r["channel"]), int(r["pulse"]), int(r["offset_fs"]))
    return TimeTags(rec, window_ps)


HIST_MAGIC = "# homspec-histogram 1"


def write_histogram(path, h: CoincidenceHistogram) -> Path:
    """Text histogram: header lines with pair and binning, then one CSV row per channel-i bin."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{HIST_MAGIC}\n# pair: {h.pair[0]},{h.pair[1]}\n")
        fh.write(f"# bin_width_ps: {h.bin_width!r}\n# origin_ps: {h.origin!r}\n")
        fh.write(f"# dropped_multi: {h.dropped_multi}\n# outside: {h.outside}\n")
        np.savetxt(fh, h.counts, fmt="%d", delimiter=",")
    return path


def read_histogram(path) -> CoincidenceHistogram:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != HIST_MAGIC:
        raise InvalidArgument(f"{path}: not a homspec histogram file")
    meta = {}
    rows = []
    for line in lines[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            rows.append(line)
    counts = np.loadtxt(rows, delimiter=",", dtype=np.int64, ndmin=2)
    pair = tuple(int(c) for c in meta["pair"].split(","))
    return CoincidenceHistogram(
        pair, counts, float(meta["bin_width_ps"]), float(meta["origin_ps"]),
        int(meta.get("dropped_multi", 0)), int(meta.get("outside", 0)),
    )
