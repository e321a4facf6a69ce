# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""Rerunning a command pipeline with the same flags and seeds must reproduce every file byte for byte."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import pytest
from click.testing import CliRunner

from ganalyzer.cli import main

if TYPE_CHECKING:
    from pathlib import Path

EDIT_SPEC = {
    "mode": "multi-edit",
    "base": "woman",
    "terms": [{"class": "woman", "weight": 1.0}, {"class": "happy", "weight": 1.5}],
}
PLAN = {
    "seed": 11,
    "dimension": 12,
    "entries": [
        {
            "name": "happy-woman",
            "base": "happy",
            "beta": 25.0,
            "count": 30,
            "terms": [{"class": "happy", "weight": 1.0}, {"class": "woman", "weight": 1.0}],
        },
        {"name": "woman", "base": "woman", "beta": 50.0, "count": 20, "terms": [{"class": "woman", "weight": 1.0}]},
    ],
}


def run_pipeline(workdir: Path, threads: str) -> dict[str, bytes]:
    runner = CliRunner()
    workdir.mkdir()
    (workdir / "spec.json").write_text(json.dumps(EDIT_SPEC), encoding="utf-8")
    (workdir / "plan.json").write_text(json.dumps(PLAN), encoding="utf-8")

    def path(name: str) -> str:
        return str(workdir / name)

    stats = ["--stats", path("woman.stats"), "--stats", path("happy.stats")]
    sweep = ["--stats", path("woman.stats"), "--sweep", "beta", "--values", "25,50,100"]
    commands = [
        ["sample", "--seed", "4", "--dimension", "12", "--count", "400", "--out", path("z.bin")],
        ["label", path("z.bin"), "--seed", "4", "--temperature", "0.5", "--out", path("labels.jsonl")],
        ["stats", path("z.bin"), path("labels.jsonl"), "--class", "woman", "--out", path("woman.stats")],
        ["stats", path("z.bin"), path("labels.jsonl"), "--class", "happy", "--out", path("happy.stats")],
        ["transform", "--spec", path("spec.json"), *stats, "--store", path("z.bin"), "--out", path("edited.bin")],
        ["label", path("edited.bin"), "--seed", "4", "--temperature", "0.5", "--out", path("edited.jsonl")],
        ["report", path("labels.jsonl"), path("edited.jsonl"), "--out", path("report")],
        ["plan", path("plan.json"), *stats, "--out", path("planned.bin")],
        ["export", path("planned.bin"), "--out", path("planned.csv")],
        ["evaluate", path("z.bin"), *sweep, "--seed", "4", "--out", path("sweep.json")],
    ]
    for args in commands:
        result = runner.invoke(main, ["--threads", threads, *args])
        assert result.exit_code == 0, (args, result.output)
    return {file.name: file.read_bytes() for file in sorted(workdir.iterdir())}


@pytest.mark.slow
def test_pipeline_is_byte_identical(tmp_path: Path) -> None:
    first = run_pipeline(tmp_path / "first", "1")
    second = run_pipeline(tmp_path / "second", "4")
    assert set(first) == {
        "edited.bin",
        "edited.jsonl",
        "happy.stats",
        "labels.jsonl",
        "plan.json",
        "planned.bin",
        "planned.bin.manifest.jsonl",
        "planned.csv",
        "report-age.svg",
        "report-cooccurrence.svg",
        "report-emotion.svg",
        "report-entanglement.svg",
        "report-gender.svg",
        "report-race.svg",
        "report.json",
        "spec.json",
        "sweep.json",
        "woman.stats",
        "z.bin",
    }
    for name, content in first.items():
        assert second[name] == content, name
