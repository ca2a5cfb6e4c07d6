import json
from pathlib import Path

import pytest

from malnormal.cli import run

DATA = Path(__file__).resolve().parents[1] / "data"


def doc(argv):
    code, out = run(argv)
    return code, json.loads(out)


def test_words_reduce():
    assert run(["words", "reduce", "aAb"]) == (0, "b")
    assert run(["words", "multiply", "ab", "Ba"]) == (0, "aa")
    assert run(["words", "abelianize", "abAAb"])[1] == "(-1,2)"
    assert doc(["words", "distance", ":ab", "ababab:a"])[1] == {"distance": "1/128"}
    assert run(["words", "in-commutator", "abAB"])[0] == 0
    assert run(["words", "in-commutator", "ab"])[0] == 1


def test_malnormal_verdicts():
    code, d = doc(["malnormal", "--rank", "2", "--gens", "aa"])
    assert code == 1 and d["verdict"] is False and d["offenders"][0]["witness"] == "a"
    assert doc(["malnormal", "--rank", "2", "--gens", "abAB"])[0] == 0


def test_subgroup_and_intersections(tmp_path):
    code, d = doc(["subgroup", "--gens", "aa", "--gens", "b", "--gens", "abA", "--contains", "ab"])
    assert code == 0 and d["index"] == 2 and d["rank"] == 3 and d["contains"] == {"ab": False}
    code, d = doc(["intersect", "--gens", "a", "--other", "aa"])
    assert d["basis"] == ["aa"]
    f = tmp_path / "h.txt"
    f.write_text("rank 2\naa\n")
    code, d = doc(["conj-intersections", "--gens-file", str(f), "--gens-file", str(f)])
    nontrivial = [c["witness"] for c in d["components"] if not c["trivial"]]
    assert nontrivial == ["", "a"]


def test_commensurator():
    code, d = doc(["commensurator", "--rank", "2", "--gens", "aa"])
    assert code == 0 and d["generators"] == ["a"] and d["index_of_H"] == 2


def test_index_is_reported_as_infinite():
    assert doc(["subgroup", "--gens", "a"])[1]["index"] == "infinite"


def test_pingpong(tmp_path):
    out = tmp_path / "report.json"
    argv = [
        "pingpong", "--rank", "2", "--seed", "abb",
        "--avoid", str(DATA / "avoid_a.txt"), "--avoid", str(DATA / "avoid_b.txt"),
        "--max-pad", "8", "--max-exp", "6", "--out", str(out),
    ]
    code, d = doc(argv)
    assert code == 0 and (d["g1"], d["g2"], d["k"]) == ("abb", "abbabAB", 1)
    assert json.loads(out.read_text()) == d


def test_coned_elliptic(tmp_path):
    f = tmp_path / "e.txt"
    f.write_text("rank 2\naa\n")
    assert doc(["coned-elliptic", "--rank", "2", "baB", "--avoid", str(f)])[0] == 0
    assert doc(["coned-elliptic", "--rank", "2", "ab", "--avoid", str(DATA / "avoid_a.txt")])[0] == 1


def test_vfree_inspection():
    code, d = doc(["vfree", "--vfree", str(DATA / "f2_swap.json")])
    assert code == 0 and d["exponent"]["N"] == 2
    code, d = doc(["vfree", "--vfree", str(DATA / "f2xz2.json"), "--gens", "aa"])
    assert d["commensurator"]["index_of_K"] == 4


def test_construct():
    code, d = doc(["construct", "--vfree", str(DATA / "f2xz2.json")])
    assert code == 0 and len(d["A"]) == 2 and all(d["verdicts"].values())
    assert run(["construct", "--vfree", str(DATA / "f2xz2.json"), "--jobs", "3"]) == run(
        ["construct", "--vfree", str(DATA / "f2xz2.json")]
    )


@pytest.mark.parametrize(
    "argv, code",
    [
        (["construct", "--vfree", str(DATA / "f2_iota.json")], 2),
        (["pingpong", "--rank", "2", "--seed", "abAB"], 2),
        (["malnormal", "--rank", "2", "--gens", "a?"], 2),
        (["construct", "--vfree", "/nonexistent.json"], 2),
        (["nonsense"], 2),
        (["pingpong", "--rank", "2", "--seed", "abb", "--avoid", str(DATA / "avoid_a.txt"),
          "--avoid", str(DATA / "avoid_b.txt"), "--max-pad", "1", "--max-candidates", "1"], 3),
    ],
)
def test_error_exit_codes(argv, code):
    assert run(argv)[0] == code


def test_selftest_is_deterministic():
    first, second = run(["selftest"]), run(["selftest"])
    assert first == second and first[0] == 0


def test_theorem_violation_exit_code(monkeypatch):
    from malnormal import cli
    from malnormal.errors import TheoremViolation

    def broken(*args, **kwargs):
        raise TheoremViolation("verdict failed", {"stage": "verdicts"})

    monkeypatch.setattr(cli, "construct_weakly_malnormal", broken)
    code, d = doc(["construct", "--vfree", str(DATA / "f2xz2.json")])
    assert code == 4 and d["transcript"] == {"stage": "verdicts"}


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "malnormal", "words", "reduce", "aAb"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "b"
