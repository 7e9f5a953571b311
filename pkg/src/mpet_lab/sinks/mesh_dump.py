"""Plain-text mesh dump for debugging."""

from __future__ import annotations

from pathlib import Path

from mpet_lab.domain.mesh import Mesh, dump_mesh


def write_mesh(mesh: Mesh, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_mesh(mesh), encoding="utf-8")
    return path
