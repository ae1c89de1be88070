import json

import numpy as np
import pytest

from wscdecomp.cli import main
from wscdecomp.complex import scale_weights, standard_complex, wsc_to_json
from wscdecomp.decomp import (
    MatrixDecomposition,
    decomposition_from_json,
    decomposition_to_json,
    random_invariant_decomposition,
    contract,
)
from wscdecomp.group import FiniteGroup, action_to_json, circle_rotation_action, edge_swap_action
from wscdecomp.positivity import psd_family_from_json
from wscdecomp.tensor import symmetrize, tensor_from_json, tensor_to_json


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(capsys, *argv):
    code = main([str(x) for x in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def circle_files(tmp_path):
    a = circle_rotation_action(3)
    rng = np.random.default_rng(0)
    v = symmetrize(a, rng.standard_normal((2, 2, 2)))
    return {
        "complex": write(tmp_path, "c.json", wsc_to_json(a.complex)),
        "action": write(tmp_path, "a.json", action_to_json(a)),
        "tensor": write(tmp_path, "v.json", tensor_to_json(v)),
        "v": v,
        "dir": tmp_path,
    }


class TestValidate:
    def test_valid(self, capsys, circle_files):
        code, out = run(capsys, "validate", circle_files["complex"])
        assert code == 0 and out == {"valid": True, "violations": []}

    def test_invalid(self, capsys, tmp_path):
        bad = write(tmp_path, "bad.json", {"n": 1, "weights": [{"set": [0], "w": 2}, {"set": [1], "w": 1},
                                                               {"set": [0, 1], "w": 3}]})
        code, out = run(capsys, "validate", bad)
        assert code == 1 and not out["valid"]

    def test_malformed_file(self, capsys, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{")
        assert main(["validate", str(p)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == 2

    def test_action(self, capsys, circle_files):
        code, out = run(capsys, "validate-action", circle_files["action"])
        assert code == 0 and out["valid"]

    def test_classify(self, capsys, circle_files, tmp_path):
        code, out = run(capsys, "classify", circle_files["action"])
        assert code == 0 and out == {"free": True, "blending": False, "strongly_blending": False}
        e = write(tmp_path, "e.json", action_to_json(edge_swap_action()))
        assert run(capsys, "classify", e)[1] == {"free": False, "blending": True, "strongly_blending": True}

    def test_refine_free(self, capsys, tmp_path):
        e = write(tmp_path, "e.json", action_to_json(edge_swap_action()))
        code, out = run(capsys, "refine-free", e)
        assert code == 0 and out["complex"]["weights"][-1] == {"set": [0, 1], "w": 2}


class TestPipeline:
    def test_seed_invariantize_verify(self, capsys, circle_files):
        f, tmp = circle_files, circle_files["dir"]
        assert main(["seed", f["tensor"], "--complex", f["complex"], "-o", str(tmp / "d.json")]) == 0
        assert main(["invariantize", str(tmp / "d.json"), "--action", f["action"], "-o", str(tmp / "dg.json")]) == 0
        code, out = run(capsys, "verify", tmp / "dg.json", "--against", f["tensor"])
        assert code == 0 and out["verified"] and out["r"] == 3 * 8

    def test_verify_mismatch(self, capsys, circle_files, tmp_path):
        f = circle_files
        main(["seed", f["tensor"], "--complex", f["complex"], "-o", str(tmp_path / "d.json")])
        other = write(tmp_path, "w.json", tensor_to_json(f["v"] + 1e-3))
        code, out = run(capsys, "verify", tmp_path / "d.json", "--against", other)
        assert code == 1 and not out["verified"]

    def test_invariantize_rejects_wrong_mode(self, circle_files, tmp_path):
        f = circle_files
        main(["seed", f["tensor"], "--complex", f["complex"], "-o", str(tmp_path / "d.json")])
        assert main(["invariantize", str(tmp_path / "d.json"), "--action", f["action"], "--mode", "blending"]) == 2

    def test_global_flags_before_subcommand(self, capsys, circle_files, tmp_path):
        f = circle_files
        main(["seed", f["tensor"], "--complex", f["complex"], "-o", str(tmp_path / "d.json")])
        assert main(["--budget", "1", "verify", str(tmp_path / "d.json"), "--against", f["tensor"]]) == 2

    def test_change_group(self, capsys, tmp_path):
        a = circle_rotation_action(4)
        d = random_invariant_decomposition(a.complex, 1, [2] * 4, 0)
        v = symmetrize(a, contract(d))
        vp = write(tmp_path, "v.json", tensor_to_json(v))
        cp = write(tmp_path, "c.json", wsc_to_json(a.complex))
        ap = write(tmp_path, "a.json", action_to_json(a))
        main(["seed", vp, "--complex", cp, "-o", str(tmp_path / "d.json")])
        main(["invariantize", str(tmp_path / "d.json"), "--action", ap, "-o", str(tmp_path / "d1.json")])
        code, out = run(capsys, "change-group", tmp_path / "d1.json", "--action", ap, "--subgroup", "0,1,2,3")
        assert code == 0
        assert main(["verify", write(tmp_path, "g.json", out), "--against", vp]) == 0

    def test_change_complex_power(self, capsys, tmp_path):
        w = standard_complex("line", 2)
        d = random_invariant_decomposition(w, 3, [2, 2, 2], 0)
        dp = write(tmp_path, "d.json", decomposition_to_json(d))
        tp = write(tmp_path, "t.json", wsc_to_json(scale_weights(w, 2)))
        code, out = run(capsys, "change-complex", dp, "--target", tp, "--mode", "power:2")
        assert code == 0 and out["r"] == 2
        np.testing.assert_allclose(contract(decomposition_from_json(out)), contract(d), atol=1e-12)

    def test_change_complex_cayley(self, capsys, tmp_path):
        C5 = FiniteGroup.cyclic(5)
        w = standard_complex("cayley", mul=C5.mul, gens=[1])
        d = random_invariant_decomposition(w, 2, [2] * 5, 0)
        dp = write(tmp_path, "d.json", decomposition_to_json(d))
        tp = write(tmp_path, "t.json", wsc_to_json(standard_complex("cayley", mul=C5.mul, gens=[1, 2])))
        gp = write(tmp_path, "g.json", {"mul": C5.mul.tolist()})
        code, out = run(capsys, "change-complex", dp, "--target", tp, "--mode", "cayley:1,2",
                        "--group", gp, "--source-gens", "1")
        assert code == 0
        np.testing.assert_allclose(contract(decomposition_from_json(out)), contract(d), atol=1e-12)

    def test_change_complex_bad_mode(self, tmp_path):
        w = standard_complex("line", 2)
        dp = write(tmp_path, "d.json", decomposition_to_json(random_invariant_decomposition(w, 1, [2] * 3, 0)))
        tp = write(tmp_path, "t.json", wsc_to_json(w))
        assert main(["change-complex", dp, "--target", tp, "--mode", "sideways"]) == 2


class TestPositivityCommands:
    def test_nn_convert_and_evaluate(self, capsys, tmp_path):
        a = circle_rotation_action(3)
        d = random_invariant_decomposition(a, 2, [2] * 3, 0, kind="nonneg")
        dp = write(tmp_path, "d.json", decomposition_to_json(d))
        code, out = run(capsys, "nn", "convert", dp, "--to", "sep")
        assert code == 0 and isinstance(decomposition_from_json(out), MatrixDecomposition)
        code, out = run(capsys, "nn", "convert", dp, "--to", "psd")
        assert code == 0
        fp = write(tmp_path, "f.json", out)
        code, out = run(capsys, "nn", "evaluate", fp)
        np.testing.assert_allclose(tensor_from_json(out), contract(d), atol=1e-9)
        assert psd_family_from_json(json.loads((tmp_path / "f.json").read_text())).check().ok

    def test_purify(self, capsys, tmp_path):
        a = circle_rotation_action(3)
        d = random_invariant_decomposition(a, 2, [2] * 3, 1, kind="nonneg")
        main(["nn", "convert", write(tmp_path, "d.json", decomposition_to_json(d)), "--to", "sep",
              "-o", str(tmp_path / "s.json")])
        code, out = run(capsys, "purify", tmp_path / "s.json")
        assert code == 0 and out["meta"]["kind"] == "purification"

    def test_purify_needs_matrices(self, tmp_path):
        d = random_invariant_decomposition(circle_rotation_action(3), 1, [2] * 3, 0)
        assert main(["purify", write(tmp_path, "d.json", decomposition_to_json(d))]) == 2

    def test_sqrt_purify(self, capsys, tmp_path):
        a = circle_rotation_action(3)
        sigma = np.eye(8) * 2.0
        sp = write(tmp_path, "s.json", tensor_to_json(sigma))
        ap = write(tmp_path, "a.json", action_to_json(a))
        code, out = run(capsys, "--budget", "1e10", "sqrt-purify", sp, ap, "--site-dims", "2,2,2")
        assert code == 0 and out["meta"]["route"] == "free"


class TestSuiteCommand:
    def test_subset(self, capsys, tmp_path):
        code = main(["suite", "--only", "1,3", "-o", str(tmp_path / "rep.json")])
        err = capsys.readouterr().err
        assert code == 0
        assert err.count("[PASS]") == 2 and "criterion  3" in err
        rep = json.loads((tmp_path / "rep.json").read_text())
        assert [c["criterion"] for c in rep["checks"]] == [1, 3] and rep["passed"] == 2

    def test_no_command(self):
        assert main([]) == 2
