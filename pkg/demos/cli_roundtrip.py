"""Drive the command-line interface end to end in a temporary directory.

Generates a sequence with `simulate`, selects its order with `select`,
and shows that re-running from the recorded manifest reproduces the
outputs byte for byte.
"""
import json
import pathlib
import tempfile

from ldsmdl.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    config = tmp / "gen.json"
    config.write_text(json.dumps({
        "type": "lds", "d": 3, "d_out": 1,
        "length": 100, "burn_in": 20, "seed": 7,
    }))
    seq = tmp / "seq.csv"
    assert main(["simulate", "--config", str(config), "--out", str(seq)]) == 0
    print("wrote", seq.name, "with", len(seq.read_text().splitlines()), "rows")

    trace = tmp / "trace.json"
    sweep = tmp / "sweep.csv"
    code = main(["select", str(seq), "--dmin", "2", "--dmax", "5",
                 "--restarts", "5", "--seed", "0",
                 "--eps", "1e-2", "--max-iters", "30",
                 "--out", str(trace), "--sweep", str(sweep)])
    assert code == 0

    manifest = json.loads((tmp / "trace.json.manifest.json").read_text())
    print("manifest command:", manifest["command"])
    print("manifest seed:", manifest["master_seed"])

    # replay the selection from the manifest snapshot
    snap = manifest["config_snapshot"]
    trace2 = tmp / "trace2.json"
    code = main(["select", snap["input"], "--dmin", str(snap["dmin"]),
                 "--dmax", str(snap["dmax"]), "--mode", snap["mode"],
                 "--criterion", snap["criterion"],
                 "--restarts", str(snap["restarts"]),
                 "--seed", str(snap["seed"]), "--eps", str(snap["eps"]),
                 "--max-iters", str(snap["max_iters"]),
                 "--out", str(trace2), "--sweep", str(tmp / "sweep2.csv")])
    assert code == 0
    same = trace.read_bytes() == trace2.read_bytes()
    print("replay byte-identical:", same)
