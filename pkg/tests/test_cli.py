import csv
import json

import numpy as np
import pytest

import splinet as sp
from splinet.cli import main

import oracles


def _run(args, capsys=None):
    code = main(args)
    return code


def test_basis_and_check(tmp_path, capsys):
    out = str(tmp_path / "b")
    assert main(["basis", "--equid", "0", "1", "11", "-k", "3", "-o", out]) == 0
    msg = capsys.readouterr().out
    assert "dspnt" in msg
    bs, _ = sp.load_archive(out + ".bs.json")
    os_fam, net = sp.load_archive(out + ".os.json")
    assert len(bs) == 9 and len(os_fam) == 9 and net.complete
    assert main(["check", "-i", out + ".os.json"]) == 0
    assert "valid" in capsys.readouterr().out


def test_basis_knots_file(tmp_path):
    kf = tmp_path / "knots.txt"
    kf.write_text("\n".join(str(x) for x in np.linspace(0, 2, 9)))
    out = str(tmp_path / "kb")
    assert main(["basis", "--knots", str(kf), "-k", "2", "--type", "bs", "-o", out]) == 0
    bs, _ = sp.load_archive(out + ".bs.json")
    assert len(bs) == 6
    assert not (tmp_path / "kb.os.json").exists()


def test_knot_flags_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "x")
    assert main(["basis", "-k", "2", "-o", out]) == 2  # no knots given
    kf = tmp_path / "k.txt"
    kf.write_text("0 0.5 1")
    assert main(["basis", "--equid", "0", "1", "5", "--knots", str(kf),
                 "-k", "2", "-o", out]) == 2  # mutually exclusive
    assert main(["frobnicate"]) == 2  # unknown command
    capsys.readouterr()


def test_eval_csv(tmp_path):
    out = str(tmp_path / "b")
    main(["basis", "--equid", "0", "1", "9", "-k", "2", "--type", "bs", "-o", out])
    ev = str(tmp_path / "vals.csv")
    assert main(["eval", "-i", out + ".bs.json", "-N", "3", "-o", ev]) == 0
    with open(ev, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["arg", "member", "value"]
    bs, _ = sp.load_archive(out + ".bs.json")
    grid = sp.sample_grid(bs.knots, 2, 3)
    assert len(rows) - 1 == grid.size * len(bs)
    # spot-check one entry against direct evaluation
    arg, member, value = float(rows[1][0]), int(rows[1][1]), float(rows[1][2])
    assert value == sp.evaluate(bs, [arg])[0, member]


def test_check_invalid_archive(tmp_path, capsys):
    out = str(tmp_path / "b")
    main(["basis", "--equid", "0", "1", "9", "-k", "2", "--type", "bs", "-o", out])
    path = out + ".bs.json"
    obj = json.loads(open(path).read())
    obj["splines"][0]["der"][0][1][0] += 1.0  # break Taylor consistency
    open(path, "w").write(json.dumps(obj))
    assert main(["check", "-i", path]) == 1
    assert "invalid" in capsys.readouterr().err


def test_missing_file_is_error(tmp_path, capsys):
    assert main(["check", "-i", str(tmp_path / "nope.json")]) == 1
    capsys.readouterr()


def test_random_and_reproducibility(tmp_path, capsys):
    rng = np.random.default_rng(0)
    mean = oracles.random_valid_family(rng, 12, 3)
    mp = str(tmp_path / "mean.json")
    sp.save_archive(mp, mean)
    o1, o2 = str(tmp_path / "d1.json"), str(tmp_path / "d2.json")
    assert main(["random", "--mean", mp, "-M", "5", "--seed", "42",
                 "--sigma", "0.3", "-o", o1]) == 0
    err = capsys.readouterr().err
    assert "Philox" in err
    assert main(["random", "--mean", mp, "-M", "5", "--seed", "42",
                 "--sigma", "0.3", "-o", o2]) == 0
    assert open(o1, "rb").read() == open(o2, "rb").read()
    fam, _ = sp.load_archive(o1)
    assert len(fam) == 5 and sp.is_valid_spline(fam).all_ok


def test_random_noise_json(tmp_path):
    rng = np.random.default_rng(1)
    mean = oracles.random_valid_family(rng, 10, 2)
    mp = str(tmp_path / "mean.json")
    sp.save_archive(mp, mean)
    nz = tmp_path / "noise.json"
    nz.write_text(json.dumps({"sigma": 0.2, "theta": 1.0, "seed": 7}))
    out = str(tmp_path / "draws.json")
    assert main(["random", "--mean", mp, "--noise", str(nz), "-M", "3", "-o", out]) == 0
    fam, _ = sp.load_archive(out)
    assert len(fam) == 3


def test_project_archive(tmp_path):
    rng = np.random.default_rng(2)
    fam = oracles.random_valid_family(rng, 14, 3, count=2)
    fp = str(tmp_path / "fam.json")
    sp.save_archive(fp, fam)
    out = str(tmp_path / "proj")
    assert main(["project", "-i", fp, "--equid", "0", "1", "6", "-o", out]) == 0
    coeff = np.loadtxt(out + ".coeff.csv", delimiter=",", skiprows=1)
    assert coeff.shape == (2, 4)  # d = 6 - 3 + 1
    proj, _ = sp.load_archive(out + ".proj.json")
    assert len(proj) == 2


def test_project_csv_then_fpca(tmp_path):
    # functional data -> projection -> FPCA, chained through files
    t = np.linspace(0.0, 1.0, 600, endpoint=False)
    rng = np.random.default_rng(3)
    samples = np.column_stack([
        np.sin(2 * np.pi * t) * (1 + 0.3 * rng.standard_normal())
        + 0.2 * rng.standard_normal() * np.cos(4 * np.pi * t)
        for _ in range(12)
    ])
    dp = tmp_path / "data.csv"
    with open(dp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arg"] + ["s%d" % i for i in range(12)])
        for a, row in zip(t, samples):
            w.writerow([repr(float(a))] + [repr(float(x)) for x in row])
    out = str(tmp_path / "proj")
    assert main(["project", "-i", str(dp), "--equid", "0", "1", "11",
                 "-k", "3", "-o", out]) == 0
    # basis archive for the fpca step: same knots, same type
    bout = str(tmp_path / "b")
    assert main(["basis", "--equid", "0", "1", "11", "-k", "3", "-o", bout]) == 0
    fout = str(tmp_path / "f")
    assert main(["fpca", "--coeff", out + ".coeff.csv",
                 "--basis", bout + ".os.json", "-o", fout]) == 0
    eig = np.loadtxt(fout + ".eigenvalues.csv", delimiter=",", skiprows=1)
    assert eig.shape[1] == 2 and np.all(np.diff(eig[:, 1]) <= 1e-12)
    scores = np.loadtxt(fout + ".scores.csv", delimiter=",", skiprows=1)
    assert scores.shape[0] == 12
    ef, _ = sp.load_archive(fout + ".eigenfunctions.json")
    assert len(ef) == len(sp.load_archive(bout + ".os.json")[0])


def test_gram_command(tmp_path):
    rng = np.random.default_rng(4)
    fam = oracles.random_valid_family(rng, 10, 2, count=3)
    fp = str(tmp_path / "fam.json")
    sp.save_archive(fp, fam)
    out = str(tmp_path / "g.csv")
    assert main(["gram", "-i", fp, "-o", out]) == 0
    g = np.loadtxt(out, delimiter=",", skiprows=1)
    assert g.shape == (3, 3)
    assert np.allclose(g, sp.gramian(fam), atol=1e-15)
    out2 = str(tmp_path / "g2.csv")
    assert main(["gram", "-i", fp, "--with", fp, "-o", out2]) == 0
    g2 = np.loadtxt(out2, delimiter=",", skiprows=1)
    assert np.allclose(g, g2, atol=1e-12)


def test_console_script_entry():
    import importlib.metadata as md

    eps = md.entry_points(group="console_scripts")
    names = {e.name for e in eps}
    assert "splinet" in names
