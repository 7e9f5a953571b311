"""Matrix Market export of the assembled block system."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import scipy.sparse as sp
from scipy.io import mmwrite

from mpet_lab.assembly.operator import BlockSystem

logger = logging.getLogger(__name__)


def _symmetric_write(path: Path, matrix: sp.spmatrix, comment: str) -> None:
    symmetric = (0.5 * (matrix + matrix.T)).tocoo()
    mmwrite(str(path), symmetric, comment=comment, symmetry="symmetric")


def block_description(system: BlockSystem) -> dict:
    pieces = system.pieces
    return {
        "mesh": {"nx": system.mesh.nx, "ny": system.mesh.ny},
        "spaces": {
            "displacement": str(pieces.displacement.kind),
            "velocity": str(pieces.velocity.kind),
            "pressure": str(pieces.pressure.kind),
        },
        "dofs": {
            "total": system.dofs,
            "displacement": pieces.displacement.ndofs,
            "velocity": pieces.velocity.ndofs,
            "pressure": pieces.pressure.ndofs,
        },
        "blocks": system.layout.describe(),
        "preconditioner": {
            "B_uv": [0, system.layout.mechanics.stop],
            "B_p": [system.layout.pressures.start, system.layout.total],
        },
        "parameters": system.params.as_dict(),
        "dg": {
            "penalty": system.dg.penalty,
            "quadrature_degree": system.dg.quadrature_degree,
        },
    }


def export_system(system: BlockSystem, directory: Path | str) -> list[Path]:
    """Write A.mtx, W.mtx, B_uv.mtx, B_p.mtx and blocks.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrices = {
        "A": (system.matrix, "time-step operator"),
        "W": (system.norm_matrix, "stability norm Gram matrix"),
        "B_uv": (system.b_uv, "preconditioner, mechanics block"),
        "B_p": (system.b_p, "preconditioner, pressure block"),
    }
    written = []
    for name, (matrix, comment) in matrices.items():
        path = directory / f"{name}.mtx"
        _symmetric_write(path, matrix, comment)
        written.append(path)
    sidecar = directory / "blocks.json"
    sidecar.write_text(
        json.dumps(block_description(system), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written.append(sidecar)
    logger.info("exported %d files to %s", len(written), directory)
    return written
