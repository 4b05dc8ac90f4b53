import logging

import numpy as np
import pytest
import ujson

from faltings_height.general.config import default_config, load_config
from faltings_height.general.errors import DomainError
from faltings_height.general.reports import (
    RunManifest,
    dumps,
    inputs_hash,
    run_directory,
    write_csv,
    write_manifest,
)
from faltings_height.general.time import timed
from faltings_height.general.workers import default_workers, parallel_map
from faltings_height.logging.logger import add_run_log, get_logger, remove_run_log


def test_load_config_defaults_are_copied():
    cfg = load_config()
    cfg["sections"]["grid"] = 3
    assert default_config["sections"]["grid"] == 400
    assert load_config()["sections"]["grid"] == 400


def test_load_config_overrides():
    cfg = load_config(**{"sections.grid": 100, "circles.nodes": None})
    assert cfg["sections"]["grid"] == 100
    assert cfg["circles"]["nodes"] == default_config["circles"]["nodes"]
    with pytest.raises(DomainError):
        load_config(**{"sections.gird": 100})


def test_load_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        ujson.dumps({"scan": {"max_degree": 4}, "polys": [[0, 1]], "init_exponents": [0.0]})
    )
    cfg = load_config(path, **{"scan.max_coeff": 1})
    assert cfg["scan"]["max_degree"] == 4
    assert cfg["scan"]["max_coeff"] == 1
    assert cfg["polys"] == [[0, 1]]
    assert cfg["init_exponents"] == [0.0]

    path.write_text(ujson.dumps({"scan": {"unknown": 1}}))
    with pytest.raises(DomainError):
        load_config(path)


def test_run_log_writes_json_lines(tmp_path):
    logger = get_logger("faltings_height.test_run_log")
    logger.setLevel(logging.DEBUG)
    hdl = add_run_log(logger, tmp_path / "run.log.jsonl")
    logger.info("first")
    logger.debug(f"{np.pi=:.3f}")
    remove_run_log(logger, hdl)

    lines = (tmp_path / "run.log.jsonl").read_text().splitlines()
    records = [ujson.loads(line) for line in lines]
    assert [r["message"] for r in records] == ["first", "np.pi=3.142"]
    assert [r["level"] for r in records] == ["INFO", "DEBUG"]
    assert records[0]["name"] == "faltings_height.test_run_log"


def test_timed_records_duration():
    timings = {}
    with timed(timings, "step"):
        sum(range(1000))
    assert timings["step"] >= 0


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]
    assert parallel_map(str, [1, 2], workers=1) == ["1", "2"]
    assert default_workers() >= 1


def test_dumps_is_deterministic():
    obj = {"b": 1 + 2j, "a": np.array([1.0, np.inf]), "c": np.float64(0.1)}
    assert dumps(obj) == dumps(dict(reversed(list(obj.items()))))
    parsed = ujson.loads(dumps(obj))
    assert parsed == {"a": [1.0, "inf"], "b": [1.0, 2.0], "c": 0.1}


def test_inputs_hash_is_stable():
    assert inputs_hash({"x": 1, "y": [1, 2]}) == inputs_hash({"y": [1, 2], "x": 1})
    assert inputs_hash({"x": 1}) != inputs_hash({"x": 2})


def test_manifest_and_csv(tmp_path):
    run_dir = run_directory(tmp_path, "scan", inputs_hash({"x": 1}))
    assert run_dir.name.startswith("scan-") and len(run_dir.name) == len("scan-") + 12

    write_csv(run_dir / "scan.csv", [{"label": "j=0", "height": -0.7}])
    assert (run_dir / "scan.csv").read_text().splitlines() == ["label,height", "j=0,-0.7"]

    manifest = RunManifest(command="scan", inputs_hash="abc", tool_version="0.1.0")
    manifest.outputs.append("scan.csv")
    content = ujson.loads(write_manifest(run_dir, manifest).read_text())
    assert content["outputs"] == ["scan.csv"]
    assert content["exit_code"] == 0
