import math

import pytest

import ranl


@pytest.fixture(scope="module")
def data():
    return ranl.synth("one-hop", train=60, valid=20, seed=3, frames=4, feature_dim=6)


def small_config():
    c = ranl.ModelConfig()
    c.frames = 4
    c.feature_dim = 6
    c.embed_dim = 5
    c.hidden = 5
    return c


def test_synth_is_deterministic(data):
    again = ranl.synth("one-hop", train=60, valid=20, seed=3, frames=4, feature_dim=6)
    assert again.video_ids("train") == data.video_ids("train")
    assert data.split_size("valid") == 20
    assert data.vocabulary[:4] == ["<pad>", "<bos>", "<eos>", "<Unk>"]


def test_dataset_round_trip(tmp_path, data):
    ranl.write_dataset(data, tmp_path)
    loaded = ranl.load_dataset(tmp_path / "manifest.jsonl")
    assert loaded.video_ids("valid") == data.video_ids("valid")
    assert loaded.classes == data.classes


def test_config_validation():
    c = ranl.ModelConfig()
    c.architecture = "vqa+"
    assert c.architecture == "vqa+"
    with pytest.raises(ranl.RanlError):
        c.architecture = "san"
    c.hidden = 0
    with pytest.raises(ranl.RanlError):
        c.validate()


def test_train_predict_and_checkpoint(tmp_path, data):
    tc = ranl.TrainConfig()
    tc.epochs = 2
    tc.learning_rate = 0.05
    result = ranl.train(data, small_config(), tc, "mc")
    assert len(result["epoch_losses"]) == 3
    assert 0.0 <= result["best_val_accuracy"] <= 1.0
    ckpt = result["checkpoint"]
    video = data.video_ids("valid")[0]
    p = ckpt.predict(data, video, "what is the color of the cup")
    assert p["answer"] in data.classes
    assert math.isclose(sum(p["probabilities"]), 1.0, abs_tol=1e-9)

    ckpt.save(tmp_path / "m.ckpt")
    loaded = ranl.load_checkpoint(tmp_path / "m.ckpt")
    assert loaded.predict(data, video, "what is the color of the cup") == p
    metrics = loaded.evaluate(data, "valid")
    assert metrics["count"] == 20 and metrics["strict"] <= metrics["accuracy"]

    again = ranl.train(data, small_config(), tc, "mc")
    assert again["epoch_losses"] == result["epoch_losses"]


def test_gradcheck():
    r = ranl.gradcheck("tiny", "oe")
    assert r["passed"] and r["max_rel_error"] <= 1e-4


def test_metric_and_optimizer():
    assert ranl.positional_score([5, 6], [7, 6], 2, 2) == 1
    assert ranl.positional_score([5, 6], [7, 6], 1, 2) == 0
    with pytest.raises(ranl.RanlError):
        ranl.positional_score([5], [5], 2, 2)
    theta, acc = ranl.adagrad_update([0.0], [1.0], [0.0], 0.1, 0.0)
    theta, acc = ranl.adagrad_update(theta, [1.0], acc, 0.1, 0.0)
    assert theta[0] == pytest.approx(-0.1 * (1 + 1 / math.sqrt(2)), abs=1e-15)
    assert acc == [2.0]


def test_cli_entry_point():
    code, out, err = ranl.run(["gradcheck", "--dims", "tiny", "--task", "mc"])
    assert code == 0 and "ok" in out
    code, _, err = ranl.run(["nope"])
    assert code == 2 and err.startswith("error: usage")
