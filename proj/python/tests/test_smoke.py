import json
import math

import pytest

import psjnet


def test_sequence_lines_round_trip():
    events = psjnet.parse_sequence_line("A:12\tB:4\tA:7")
    assert events == [("A", 12), ("B", 4), ("A", 7)]
    assert psjnet.serialize_sequence(events) == "A:12\tB:4\tA:7"


def test_parse_errors_are_library_errors():
    with pytest.raises(psjnet.PsjnetError):
        psjnet.parse_sequence_line("C:1")
    assert issubclass(psjnet.PsjnetError, RuntimeError)


def test_metrics():
    scores = [0.1, 0.5, 0.2, 0.5]
    assert psjnet.rank_of(scores, 3) == 2
    assert psjnet.recall_at_k(scores, 2, 3) == 1.0
    assert psjnet.mrr_at_k(scores, 2, 3) == pytest.approx(1.0 / 3.0)
    r = psjnet.paired_t_test([0.9, 0.4, 0.7, 0.8, 0.3, 0.6, 1.0, 0.5, 0.7, 0.2],
                             [0.5, 0.5, 0.4, 0.6, 0.1, 0.6, 0.6, 0.3, 0.2, 0.3])
    assert r["t"] == pytest.approx(3.0)
    assert r["df"] == 9
    assert r["significant"]


def test_model_surface(tmp_path):
    model = psjnet.Model(variant="psjnet1", k=2, hidden=6, vocab_a=[1, 2, 3], vocab_b=[10, 11])
    assert json.loads(model.config)["variant"] == "psjnet1"
    assert "A.emb" in model.param_names()
    # Uniform decoder bound: untrained losses stay finite and positive.
    loss = model.loss("A:1\tB:10\tA:2\tB:11")
    assert math.isfinite(loss) and loss > 0
    dist = model.predict("A:1\tB:10", "A")
    assert len(dist) == 3
    assert sum(dist) == pytest.approx(1.0)
    top = model.recommend("A:1\tB:10", "B", k=1)
    assert len(top) == 1 and top[0][0] in (10, 11)

    path = tmp_path / "m.ckpt"
    model.save(str(path))
    assert psjnet.Model.load(str(path)).to_bytes() == model.to_bytes()
    assert psjnet.Model.from_bytes(model.to_bytes()).param("A.emb") == model.param("A.emb")
    with pytest.raises(psjnet.PsjnetError):
        psjnet.Model.from_bytes(b"not a checkpoint")


def test_train_and_evaluate():
    data = psjnet.make_synthetic_benchmark(accounts=12, sequences_per_account=2, seed=3)
    assert set(data) == {"train", "valid", "test"}
    model, history = psjnet.train(data["train"], data["valid"], k=2, hidden=8, epochs=2, patience=0)
    assert [row["epoch"] for row in history] == [1, 2]
    report = model.evaluate(data["test"], cutoffs=[5])
    for domain in ("A", "B"):
        assert 0.0 <= report[domain]["mrr@5"] <= report[domain]["recall@5"] <= 1.0
