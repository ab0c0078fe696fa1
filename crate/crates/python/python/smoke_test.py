"""Smoke test for the affectcouple extension module.

Run from the repository root after building:

    cargo build -p affectcouple-py --release
    cp target/release/libaffectcouple.so crates/python/python/affectcouple.so
    python3 crates/python/python/smoke_test.py
"""

import json
import os
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)
DATA = os.path.join(HERE, "..", "..", "..", "data")

import affectcouple as ac


def main():
    tax = ac.Taxonomy.load(os.path.join(DATA, "demo.txt"))
    assert "snake" in tax
    assert tax.term_similarity("snake", "snake") == 1.0
    assert tax.semantic_distance(["snake"], ["snake"]) == 1.0
    assert abs(ac.emotion_distance((1.0, 1.0), (4.0, 5.0)) - 5.0) < 1e-12

    corpus = ac.Corpus.from_manifest(os.path.join(DATA, "three.csv"), tax, eps_sem=100.0, eps_emo=1.0)
    assert len(corpus) == 3

    est = ac.estimate(corpus, tax, ["snake"])
    top = est["candidates"][0]
    assert abs(top["likelihood"] - 2 / 3) < 1e-9, top

    # identical semantics never couple
    assert ac.coupled_clusters(corpus, tax) == [["1"], ["2"], ["3"]]
    assert ac.couple(corpus, tax, "1", "2")["coupled"] is False

    corpus.add("new", "new.jpg", ["viper"])
    session = ac.Session.open("s1", corpus, tax, "new")
    assert session.state == "proposed"
    session.accept(0)
    assert session.state == "committed"
    rev = corpus.commit(session)
    assert corpus.get("new")["rating"] is not None
    assert rev == corpus.revision

    try:
        tax.term_similarity("snake", "unicorn")
    except ac.AffectcoupleError as e:
        assert e.code == "UNKNOWN_TERM", e.code
    else:
        raise AssertionError("expected AffectcoupleError")

    with open(os.path.join(DATA, "synth.json")) as f:
        spec = f.read()
    synth, truth = ac.generate_synthetic(spec, tax, 7)
    assert len(synth) == 72 and len(truth) == 72
    loo = ac.leave_one_out(synth, tax, eps_sem=4.0, ground_truth=truth)
    assert len(loo["rows"]) == 72

    groups = ac.build_groups(synth, tax, "animals = animal | food = food | sport = sport")
    assert [g["name"] for g in groups] == ["animals", "food", "sport"]

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "c.acx")
        synth.save(path)
        again = ac.Corpus.load(path)
        assert json.dumps(again.documents()) == json.dumps(synth.documents())

    print("smoke test ok")


if __name__ == "__main__":
    main()
