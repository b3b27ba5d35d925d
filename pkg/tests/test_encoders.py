"""Tests for the specificity encoders, Enc' and the classifier."""

import numpy as np
import pytest

from autograd.tensor import Tensor
from core.exceptions import InvalidArgumentError, ShapeError
from core.models import Modality
from model.encoders import Classifier, InvarianceEncoder, LSTMEncoder, TextCNNEncoder, time_mask


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def test_time_mask():
    np.testing.assert_array_equal(
        time_mask(np.array([1, 3]), 3), [[True, False, False], [True, True, True]]
    )


# --- LSTM ---


def test_lstm_zero_input_zero_params_gives_zero():
    """All gates at 0 leave the cell and hidden state at 0."""
    lstm = LSTMEncoder("enc_a", 3, 4, np.random.default_rng(0))
    lstm.params.fill_(0.0)
    out = lstm(Tensor(np.zeros((2, 5, 3))), np.array([5, 2]))
    np.testing.assert_array_equal(out.data, np.zeros((2, 4)))


def test_lstm_forget_bias_initialised_to_one():
    lstm = LSTMEncoder("enc_a", 3, 4, np.random.default_rng(0))
    np.testing.assert_array_equal(lstm.params["bias"].data[4:8], np.ones(4))


def test_lstm_single_step_returns_that_hidden_state():
    """With T = 1 the max-pool returns the one hidden state, computed by hand."""
    rng = np.random.default_rng(1)
    lstm = LSTMEncoder("enc_a", 3, 4, rng)
    x = rng.standard_normal((2, 1, 3))
    gates = x[:, 0, :] @ lstm.params["w_ih"].data + lstm.params["bias"].data
    i, f, g, o = (gates[:, k * 4 : (k + 1) * 4] for k in range(4))
    c = _sigmoid(i) * np.tanh(g)
    expected = _sigmoid(o) * np.tanh(c)
    out = lstm(Tensor(x), np.array([1, 1]))
    np.testing.assert_allclose(out.data, expected, atol=1e-12)


def test_lstm_ignores_padded_steps():
    """Frames after a row's length do not change its encoding."""
    rng = np.random.default_rng(2)
    lstm = LSTMEncoder("enc_a", 3, 4, rng)
    short = rng.standard_normal((1, 2, 3))
    padded = np.concatenate([short, 100.0 * rng.standard_normal((1, 3, 3))], axis=1)
    a = lstm(Tensor(short), np.array([2]))
    b = lstm(Tensor(padded), np.array([2]))
    np.testing.assert_allclose(a.data, b.data, atol=1e-12)


def test_lstm_rejects_empty_sequence():
    lstm = LSTMEncoder("enc_a", 3, 4, np.random.default_rng(0))
    with pytest.raises(InvalidArgumentError, match="empty"):
        lstm(Tensor(np.zeros((1, 2, 3))), np.array([0]))


def test_lstm_rejects_wrong_width():
    lstm = LSTMEncoder("enc_a", 3, 4, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        lstm(Tensor(np.zeros((1, 2, 5))), np.array([2]))


# --- TextCNN ---


def _textcnn_oracle(cnn: TextCNNEncoder, seq: np.ndarray) -> np.ndarray:
    """Enumerates every window of one unpadded sequence directly."""
    pooled = []
    for k in cnn.kernel_sizes:
        w = cnn.params[f"conv{k}.weight"].data
        b = cnn.params[f"conv{k}.bias"].data
        windows = [
            np.maximum(sum(seq[p + j] @ w[j] for j in range(k)) + b, 0.0)
            for p in range(seq.shape[0] - k + 1)
        ]
        pooled.append(np.max(windows, axis=0))
    features = np.concatenate(pooled)
    return features @ cnn.params["proj.weight"].data + cnn.params["proj.bias"].data


def test_textcnn_zero_input_zero_params_gives_zero():
    cnn = TextCNNEncoder("enc_t", 4, 3, (2, 3), 5, np.random.default_rng(0))
    cnn.params.fill_(0.0)
    out = cnn(Tensor(np.zeros((2, 4, 4))), np.array([4, 3]))
    np.testing.assert_array_equal(out.data, np.zeros((2, 5)))


def test_textcnn_is_pure():
    """The same input twice gives the same output."""
    rng = np.random.default_rng(3)
    cnn = TextCNNEncoder("enc_t", 4, 3, (2, 3), 5, rng)
    x = rng.standard_normal((2, 6, 4))
    lengths = np.array([6, 4])
    np.testing.assert_array_equal(cnn(Tensor(x), lengths).data, cnn(Tensor(x), lengths).data)


def test_textcnn_padding_matches_window_enumeration():
    """T = 5 content zero-padded to T = 8 pools over the valid windows only."""
    rng = np.random.default_rng(4)
    cnn = TextCNNEncoder("enc_t", 4, 3, (2, 3), 5, rng)
    seq = rng.standard_normal((5, 4))
    padded = np.zeros((1, 8, 4))
    padded[0, :5] = seq
    short = cnn(Tensor(seq[None]), np.array([5]))
    long = cnn(Tensor(padded), np.array([5]))
    np.testing.assert_allclose(short.data, long.data, atol=1e-12)
    np.testing.assert_allclose(long.data[0], _textcnn_oracle(cnn, seq), atol=1e-12)


def test_textcnn_pads_sequences_shorter_than_widest_kernel():
    """A one-word utterance still yields a feature vector."""
    cnn = TextCNNEncoder("enc_t", 4, 3, (2, 3), 5, np.random.default_rng(5))
    out = cnn(Tensor(np.ones((1, 1, 4))), np.array([1]))
    assert out.shape == (1, 5)


def test_textcnn_short_differentiable_input_rejected():
    cnn = TextCNNEncoder("enc_t", 4, 3, (2, 3), 5, np.random.default_rng(5))
    with pytest.raises(ShapeError, match="pad"):
        cnn(Tensor(np.ones((1, 2, 4)), requires_grad=True), np.array([2]))


# --- Enc' and classifier ---


def test_invariance_encoder_zero_params_eval_gives_zero():
    enc = InvarianceEncoder("enc_inv", 4, 4, 0.5, np.random.default_rng(0))
    enc.params.fill_(0.0)
    out = enc(Tensor(np.random.default_rng(1).standard_normal((3, 4))), Modality.TEXTUAL)
    np.testing.assert_array_equal(out.data, np.zeros((3, 4)))


def test_invariance_encoder_shared_and_separate_layouts():
    shared = InvarianceEncoder("enc_inv", 4, 4, 0.5, np.random.default_rng(0))
    separate = InvarianceEncoder("enc_inv", 4, 4, 0.5, np.random.default_rng(0), shared=False)
    assert sorted(k for k, _ in shared.params.items()) == ["fc.bias", "fc.weight"]
    assert {k.split(".")[0] for k, _ in separate.params.items()} == {"fc_a", "fc_v", "fc_t"}


def test_invariance_encoder_dropout_only_in_train_mode():
    enc = InvarianceEncoder("enc_inv", 4, 4, 0.5, np.random.default_rng(0))
    x = Tensor(np.abs(np.random.default_rng(1).standard_normal((20, 4))))
    first = enc(x, Modality.ACOUSTIC)
    np.testing.assert_array_equal(first.data, enc(x, Modality.ACOUSTIC).data)
    trained = enc(x, Modality.ACOUSTIC, train=True, rng=np.random.default_rng(2))
    assert not np.array_equal(trained.data, first.data)


def test_classifier_zero_input_returns_final_bias():
    """Zero input and weights: logits equal the last layer's bias."""
    clf = Classifier("classifier", 6, 5, 4, 0.5, np.random.default_rng(0))
    clf.params.fill_(0.0)
    bias = np.array([0.1, -0.2, 0.3, 0.4])
    clf.params["fc3.bias"].data[...] = bias
    logits = clf(Tensor(np.zeros((3, 6))))
    np.testing.assert_array_equal(logits.data, np.tile(bias, (3, 1)))


def test_classifier_rejects_wrong_width():
    clf = Classifier("classifier", 6, 5, 4, 0.5, np.random.default_rng(0))
    with pytest.raises(ShapeError, match="classifier"):
        clf(Tensor(np.zeros((3, 7))))
