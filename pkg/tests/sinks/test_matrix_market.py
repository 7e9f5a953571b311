import json

import numpy as np
from scipy.io import mmread

from mpet_lab.assembly.operator import assemble_operator
from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.domain.parameters import MpetParameters
from mpet_lab.sinks.matrix_market import export_system
from mpet_lab.sinks.mesh_dump import write_mesh


def test_export_writes_symmetric_matrices_and_layout(tmp_path):
    system = assemble_operator(build_structured_mesh(2, 2), MpetParameters.create(1))

    written = export_system(system, tmp_path / "out")

    assert [path.name for path in written] == [
        "A.mtx",
        "W.mtx",
        "B_uv.mtx",
        "B_p.mtx",
        "blocks.json",
    ]
    assert "symmetric" in (tmp_path / "out" / "A.mtx").read_text().splitlines()[0]
    matrix = mmread(str(tmp_path / "out" / "A.mtx")).toarray()
    np.testing.assert_allclose(matrix, system.matrix.toarray(), atol=1e-14)

    blocks = json.loads((tmp_path / "out" / "blocks.json").read_text())
    assert blocks["dofs"]["total"] == system.dofs
    assert blocks["spaces"]["velocity"] == "RT0"
    assert [b["name"] for b in blocks["blocks"]] == ["u", "v1", "ud", "vd1", "p1"]


def test_mesh_dump_file(tmp_path):
    path = write_mesh(build_structured_mesh(2, 1), tmp_path / "mesh.txt")

    lines = path.read_text().splitlines()
    assert lines[0] == "# mesh 2x1"
    assert sum(line.startswith("t ") for line in lines) == 4
