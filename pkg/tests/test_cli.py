import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from almostrep import fixtures as fx
from almostrep.cli import run_command
from almostrep.cocycle import Multiplier, random_multiplier
from almostrep.core import restrict
from almostrep.measure import default_measures
from almostrep.projectfile import Project, ProjectError, RepEntry, dumps, loads, parse_project, to_tree
from almostrep.rep import PseudoRep, defect_and_bound


def write(tmp_path, project, name="p.json"):
    path = tmp_path / name
    path.write_text(dumps(project))
    return str(path)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def z2_almost():
    return Project(fx.z2(), representations=[RepEntry("T", PseudoRep([2], [np.eye(2), np.diag([1.02, 1.0])]))])


def full_projects():
    out = []
    for f in fx.rep_fixtures():
        mu, c = default_measures(f.G)
        p = Project(f.G, mu, c, f.sigma, representations=[RepEntry(f.name, f.R)])
        H, inc = restrict(f.G, [0])
        p.representations.append(RepEntry("restricted", PseudoRep(f.R.fiber_dim[inc.point_map], [f.R[a] for a in inc.arrow_map]), (0,)))
        out.append(p)
    return out


def test_round_trip_all_fixtures():
    for p in full_projects():
        text = dumps(p)
        q = loads(text)
        assert q == p
        assert dumps(q) == text
        for a, b in zip(p.representations, q.representations):
            for m, n in zip(a.rep.matrices, b.rep.matrices):
                assert m.tobytes() == n.tobytes()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=8, max_size=8))
def test_round_trip_arbitrary_doubles(vals):
    G = fx.z2()
    M = np.array(vals[:4]).reshape(2, 2) + 1j * np.array(vals[4:]).reshape(2, 2)
    p = Project(G, representations=[RepEntry("X", PseudoRep([2], [np.eye(2), M]))])
    q = loads(dumps(p))
    assert q.representations[0].rep[1].tobytes() == M.tobytes()


def test_round_trip_random_multiplier(rng):
    G = fx.s3_action()
    p = Project(G, multiplier=random_multiplier(G, rng))
    q = loads(dumps(p))
    assert q.multiplier.entries.tobytes() == p.multiplier.entries.tobytes()


def test_parse_z2_file(tmp_path):
    p = parse_project(write(tmp_path, z2_almost()))
    assert p.groupoid.n_arrows == 2


def test_missing_inverse_is_dangling(tmp_path):
    tree = to_tree(z2_almost())
    tree["groupoid"]["inverse"] = tree["groupoid"]["inverse"][:1]
    with pytest.raises(ProjectError, match="dangling id"):
        loads(json.dumps(tree))


def test_normality_failure(tmp_path):
    tree = to_tree(z2_almost())
    tree["multiplier"] = {"entries": [[0, 1, [2.0, 0.0]]]}
    with pytest.raises(ProjectError, match="normality") as exc:
        loads(json.dumps(tree))
    assert "normality" in exc.value.report.kinds()
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(tree))
    code, _, err = run("cocycle-check", path)
    assert code == 1 and "normality" in err


def test_parse_error_has_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"groupoid": {\n  "points": [1,]\n}')
    with pytest.raises(ProjectError, match=r"broken.json:2:\d+: parse error"):
        parse_project(path)


def test_unresolved_ids():
    tree = to_tree(z2_almost())
    tree["groupoid"]["arrows"][1]["src"] = "nowhere"
    with pytest.raises(ProjectError, match="dangling id"):
        loads(json.dumps(tree))
    tree = to_tree(z2_almost())
    tree["representations"][0]["matrices"][1]["arrow"] = 7
    with pytest.raises(ProjectError, match="dangling id"):
        loads(json.dumps(tree))


def test_rep_defect_output(tmp_path):
    code, out, _ = run("rep-defect", write(tmp_path, z2_almost()))
    assert code == 0
    G = fx.z2()
    (r, b), = defect_and_bound(G, Multiplier(np.ones((2, 2))), z2_almost().representations[0].rep).values()
    assert f"r = {r:.12g}, b = {b:.12g}" in out
    assert "r = 0.0404, b = 1.02" in out
    assert "almost: true" in out


def test_rep_correct_exact_single_row(tmp_path):
    p = Project(fx.z2(), representations=[RepEntry("S", PseudoRep([1], [[[1]], [[-1]]]))])
    trace = tmp_path / "trace.csv"
    code, out, _ = run("rep-correct", write(tmp_path, p), "--trace", trace)
    assert code == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "iter,r_max,b_max,step_max"
    assert len(lines) == 2
    assert float(lines[1].split(",")[1]) <= 1e-12
    assert loads(out) == p


def test_rep_correct_almost(tmp_path):
    code, out, _ = run("rep-correct", write(tmp_path, z2_almost()))
    assert code == 0
    R = loads(out).get("T").rep
    assert np.max(np.abs(R[1] - np.eye(2))) <= 1e-12


def test_numerical_fault_exit_2(tmp_path):
    trace = tmp_path / "t.csv"
    code, _, err = run("rep-correct", write(tmp_path, z2_almost()), "--max-iter", "1", "--trace", trace)
    assert code == 2 and "numerical fault" in err
    assert len(trace.read_text().splitlines()) == 2


def test_not_almost_exit_1(tmp_path):
    p = Project(fx.z2(), representations=[RepEntry("T", PseudoRep([2], [np.eye(2), np.diag([1.1, 1.0])]))])
    code, _, _ = run("rep-correct", write(tmp_path, p))
    assert code == 1


def test_separate(tmp_path):
    path = write(tmp_path, z2_almost())
    code, out, _ = run("regular", path, "-o", tmp_path / "r.json")
    assert code == 0 and out == ""
    code, out, _ = run("separate", tmp_path / "r.json", "--rep", "regular")
    assert code == 0 and out == "separates: true\n"
    p = Project(fx.z2(), representations=[RepEntry("one", PseudoRep([1], [[[1]], [[1]]]))])
    code, out, _ = run("separate", write(tmp_path, p))
    assert code == 1 and out.startswith("separates: false")


def test_usage_errors(tmp_path):
    assert run("frobnicate", "x")[0] == 64
    assert run()[0] == 64
    assert run("rep-defect")[0] == 64
    assert run("rep-perturb", "x", "--eps", "abc")[0] == 64
    assert run("validate", tmp_path / "missing.json")[0] == 1


def test_push_pull_cli(tmp_path):
    G = fx.z4_action()
    p = Project(G, representations=[RepEntry("sign", PseudoRep([1], [[[1]], [[-1]]]), (0,))])
    path = write(tmp_path, p)
    code, out, _ = run("push", path)
    assert code == 0
    R = loads(out).get("sign_push").rep
    assert R[G.arrow_index("(1,b)")][0, 0] == -1.0
    pushed = tmp_path / "pushed.json"
    pushed.write_text(out)
    code, out, _ = run("pull", pushed, "--rep", "sign_push", "--subset", "a")
    assert code == 0
    assert loads(out).get("sign_push_pull").rep == p.representations[0].rep
    code, out2, _ = run("push", path, "--section", "0,6")
    assert code == 0
    code, _, _ = run("push", path, "--section", "0,1")
    assert code == 1


def test_other_commands(tmp_path):
    G = fx.z2()
    sigma = Multiplier.from_dict(G, {(1, 1): 2.0})
    R = PseudoRep([1], [[[1]], [[-np.sqrt(2.0)]]])
    p = Project(G, multiplier=sigma, representations=[RepEntry("R", R)])
    path = write(tmp_path, p)
    assert run("validate", path)[0] == 0
    assert run("cocycle-check", path)[1].endswith("isometric: false\n")
    code, out, _ = run("cocycle-isometrize", path)
    assert code == 0
    q = loads(out)
    assert abs(q.multiplier(1, 1) - 1) <= 1e-14
    iso = tmp_path / "iso.json"
    iso.write_text(out)
    assert run("rep-check", iso, "--tol", "1e-10")[0] == 0
    assert run("rep-unitarize", iso)[0] == 0
    code, out, _ = run("haar-make", path)
    assert code == 0 and loads(out).haar is not None
    haar = tmp_path / "haar.json"
    haar.write_text(out)
    assert run("haar-check", haar)[0] == 0
    assert run("haar-check", path)[0] == 1
    code, out, _ = run("cutoff-normalize", haar)
    assert code == 0 and np.array_equal(loads(out).cutoff.values, [1.0])
    assert run("rep-unitarize", path)[0] == 1  # non-isometric multiplier


def test_extend_correct_cli(tmp_path):
    G = fx.bundle_pq()
    p = Project(
        G,
        representations=[
            RepEntry("R_p", PseudoRep([1], [[[1]], [[-1]]]), (0,)),
            RepEntry("T", PseudoRep([1, 1], [[[1]], [[-1]], [[1]], [[1.01]]])),
        ],
    )
    code, out, _ = run("extend-correct", write(tmp_path, p), "--rep", "R_p", "--outer", "T")
    assert code == 0
    R = loads(out).get("R_p_extended").rep
    assert R[1][0, 0] == -1 and abs(R[3][0, 0] - 1) <= 1e-12


def test_determinism(tmp_path):
    G = fx.s3_action()
    p = Project(G, representations=[RepEntry("reg", fx.regular(G))])
    path = write(tmp_path, p)
    outs = []
    for k in range(2):
        o = tmp_path / f"pert{k}.json"
        assert run("rep-perturb", path, "--eps", "0.004", "--seed", "9", "-o", o)[0] == 0
        t = tmp_path / f"trace{k}.csv"
        c = tmp_path / f"corr{k}.json"
        assert run("rep-correct", o, "--trace", t, "-o", c)[0] == 0
        outs.append((o.read_bytes(), t.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]


def test_subprocess_entry_point(tmp_path):
    import subprocess
    import sys

    path = write(tmp_path, Project(fx.z4(), representations=[RepEntry("reg", fx.regular(fx.z4()))]))
    outs = []
    for k in range(2):
        o = tmp_path / f"o{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "almostrep.cli", "rep-perturb", path, "--eps", "0.01", "--seed", "5", "-o", str(o)],
            capture_output=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]
    proc = subprocess.run([sys.executable, "-m", "almostrep.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 64 and "usage" in proc.stderr
