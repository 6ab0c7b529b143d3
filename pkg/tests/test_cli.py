import subprocess
import sys

import pytest

from axisdesc import corpus
from axisdesc.cli import main, read_config
from axisdesc.corpus import write_pgm
from axisdesc.database import DescriptorDatabase
from axisdesc.shapes import Pose, rasterize


@pytest.fixture
def images(tmp_path):
    out = {}
    for name, sil in (("hand", corpus.hand()), ("hand2", corpus.articulated_hand()), ("star", corpus.star(5)),
                      ("bone", corpus.dog_bone())):
        p = tmp_path / f"{name}.pgm"
        write_pgm(rasterize(sil, Pose(0.8))[0], p)
        out[name] = p
    return out


def run(argv, capsys):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_extract_writes_descriptor_field_and_svg(images, tmp_path, capsys):
    code, out, _ = run(["extract", images["star"], "-o", tmp_path / "s", "--field", tmp_path / "f.txt",
                        "--axes", tmp_path / "s.svg"], capsys)
    assert code == 0
    assert "topology single-center" in out
    descs = sorted(tmp_path.glob("s*.desc"))
    assert descs and descs[0].read_text().startswith("AXISDESC 1\n")
    assert (tmp_path / "f.txt").read_text().startswith("FIELD ")
    assert (tmp_path / "s.svg").read_text().lstrip().startswith("<svg")


def test_match_prints_scores(images, tmp_path, capsys):
    run(["extract", images["hand"], "-o", tmp_path / "a"], capsys)
    run(["extract", images["hand2"], "-o", tmp_path / "b"], capsys)
    code, out, _ = run(["match", tmp_path / "a", tmp_path / "b"], capsys)
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith("total ")
    assert len(first.split()[1].split(".")[1]) == 3
    assert any(line.startswith("pair ") for line in out.splitlines())


def test_exit_codes(images, tmp_path, capsys):
    assert run(["extract", images["bone"]], capsys)[0] == 3
    assert run(["extract", images["bone"], "--target", "dumbbell", "-o", tmp_path / "b"], capsys)[0] == 0
    assert run(["extract", tmp_path / "missing.pgm"], capsys)[0] == 1
    assert run(["match", tmp_path / "nothing", tmp_path / "nothing"], capsys)[0] == 1
    assert run(["extract", images["hand"], "--mode", "screened"], capsys)[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 1
    tiny = tmp_path / "tiny.pgm"
    import numpy as np

    fg = np.zeros((10, 10), bool)
    fg[4:7, 4:7] = True
    write_pgm(fg, tiny)
    code, _, err = run(["extract", tiny], capsys)
    assert code == 2 and "descriptor" in err


def test_config_file_and_override(images, tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# tuned\nmin_length_fraction = 0.05\ntarget=dumbbell\n")
    assert read_config(cfg) == {"min-length-fraction": "0.05", "target": "dumbbell"}
    assert run(["extract", images["bone"], "--config", cfg, "-o", tmp_path / "x"], capsys)[0] == 0
    assert run(["extract", images["bone"], "--config", cfg, "--target", "center", "-o", tmp_path / "y"], capsys)[0] == 3
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = red\n")
    assert run(["extract", images["hand"], "--config", bad], capsys)[0] == 1


def test_database_query_and_guard(images, tmp_path, capsys):
    db = tmp_path / "db"
    for name in ("hand", "hand2", "star"):
        code, _, _ = run(["extract", images[name], "-o", tmp_path / name, "--db", db, "--category",
                          "star" if name == "star" else "hand"], capsys)
        assert code == 0
    assert (db / "manifest").read_text().startswith("AXISDB 1\n")
    code, out, _ = run(["query", db, images["hand"], "-k", "2", "--exclude", "hand"], capsys)
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 2 and rows[0].split()[3] == "hand2"
    # mismatched extraction parameters are refused, both ways in
    code, _, err = run(["query", db, images["hand"], "--min-length-fraction", "0.01"], capsys)
    assert code == 1 and "differ" in err
    code, _, _ = run(["extract", images["hand"], "--db", db, "--margin-fraction", "0.01"], capsys)
    assert code == 1
    assert len(DescriptorDatabase.open(db).entries) == 3


def test_gen_corpus(tmp_path, capsys):
    code, out, _ = run(["gen-corpus", tmp_path / "c", "--per", "1"], capsys)
    assert code == 0
    labels = (tmp_path / "c" / "labels.txt").read_text().split("\n")
    assert len([ln for ln in labels if ln]) == 14
    assert len(list((tmp_path / "c").glob("*.pgm"))) == 14


def test_runs_are_byte_identical(images, tmp_path):
    # two fresh processes: extract, add to a database, query
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        cmds = [
            ["extract", images["hand"], "-o", d / "hand", "--db", d / "db", "--category", "hand"],
            ["extract", images["star"], "-o", d / "star", "--db", d / "db", "--category", "star"],
            ["query", d / "db", images["hand2"], "-k", "2"],
        ]
        text = []
        for c in cmds:
            r = subprocess.run([sys.executable, "-m", "axisdesc.cli", *map(str, c)], capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            text.append(r.stdout.replace(str(d), "<run>"))
        files = {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}
        manifest = files.pop("db/manifest").replace(str(d).encode(), b"<run>")
        outs.append((text, files, manifest))
    assert outs[0] == outs[1]
