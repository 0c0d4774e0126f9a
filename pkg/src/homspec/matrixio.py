"""CSV exchange format for matrices sampled on a frequency grid.

Layout::

    # homspec-matrix 1
    # kind: jsi
    # nu1: center=190.95 span=15 n=512 units=THz
    # nu2: center=190.95 span=15 n=512 units=THz
    # delta_t_ps: 0.5            (optional extra metadata, any key)
    # block: re
    <n1 rows of n2 comma-separated values>
    # block: im                  (complex matrices only)
    <n1 rows>
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .spectral import FrequencyGrid

MAGIC = "homspec-matrix 1"


def _axis_line(nu):
    center = float(0.5 * (nu[0] + nu[-1]))
    span = float(nu[-1] - nu[0])
    return f"center={center!r} span={span!r} n={nu.size} units=THz"


def _parse_axis(text):
    fields = dict(item.split("=", 1) for item in text.split())
    center, span, n = float(fields["center"]), float(fields["span"]), int(fields["n"])
    return center + np.linspace(-0.5 * span, 0.5 * span, n)


def format_matrix(matrix, grid: FrequencyGrid, kind: str, **meta) -> str:
    matrix = np.asarray(matrix)
    if matrix.shape != grid.shape:
        raise InvalidArgument(f"matrix shape {matrix.shape} does not match grid {grid.shape}")
    out = io.StringIO()
    out.write(f"# {MAGIC}\n# kind: {kind}\n")
    out.write(f"# nu1: {_axis_line(grid.nu1)}\n# nu2: {_axis_line(grid.nu2)}\n")
    for key, value in meta.items():
        out.write(f"# {key}: {value}\n")
    blocks = [("re", matrix.real), ("im", matrix.imag)] if np.iscomplexobj(matrix) else [("re", matrix)]
    for name, block in blocks:
        out.write(f"# block: {name}\n")
        np.savetxt(out, block, fmt="%.17g", delimiter=",")
    return out.getvalue()


def write_matrix(path, matrix, grid: FrequencyGrid, kind: str, **meta) -> Path:
    path = Path(path)
    path.write_text(format_matrix(matrix, grid, kind, **meta), encoding="utf-8")
    return path


def read_matrix(path):
    """Return ``(matrix, grid, meta)``; ``meta`` holds every header key as a string."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != f"# {MAGIC}":
        raise InvalidArgument(f"{path}: not a homspec matrix file")
    meta = {}
    blocks = {}
    current = None
    for line in lines[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            key, value = key.strip(), value.strip()
            if key == "block":
                current = value
                blocks[current] = []
            else:
                meta[key] = value
        elif line.strip():
            if current is None:
                raise InvalidArgument(f"{path}: data before first block header")
            blocks[current].append(line)
    grid = FrequencyGrid(_parse_axis(meta.pop("nu1")), _parse_axis(meta.pop("nu2")))
    arrays = {
        name: np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2) for name, rows in blocks.items()
    }
    matrix = arrays["re"] + 1j * arrays["im"] if "im" in arrays else arrays["re"]
    if matrix.shape != grid.shape:
        raise InvalidArgument(f"{path}: block shape {matrix.shape} disagrees with header {grid.shape}")
    return matrix, grid, meta
