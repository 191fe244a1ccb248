"""Per-word label scorer: char-CNN + word embedding -> Bi-LSTM -> log-softmax.

Every forward helper takes a Tape and records a fused backward closure, so
one call to ``Tape.backward`` propagates gradients from a loss scalar into
every Parameter. All arrays are float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tape, Var, add_all
from .errors import ConfigurationError, ContractViolation, DataError
from .labels import OUTSIDE, TypeSystem


@dataclass(frozen=True)
class EncoderConfig:
    word_dim: int = 100
    char_dim: int = 30
    cnn_filters: int = 30
    cnn_width: int = 3
    hidden_dim: int = 150
    dropout: float = 0.5
    max_sentence_length: int = 256

    def __post_init__(self):
        for name in ("word_dim", "char_dim", "cnn_filters", "cnn_width", "hidden_dim",
                     "max_sentence_length"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must lie in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.cnn_filters

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim


class Vocabulary:
    """Word and character index maps with reserved UNK/PAD entries."""

    UNK = "<unk>"
    PAD = "<pad>"

    def __init__(self, words, chars):
        self.words = [self.UNK, self.PAD] + [w for w in words if w not in (self.UNK, self.PAD)]
        self.chars = [self.UNK, self.PAD] + [c for c in chars if c not in (self.UNK, self.PAD)]
        self._word_to_id = {w: i for i, w in enumerate(self.words)}
        self._char_to_id = {c: i for i, c in enumerate(self.chars)}

    @classmethod
    def build(cls, token_sentences) -> "Vocabulary":
        """Collect words and characters in first-seen order."""
        words: dict[str, None] = {}
        chars: dict[str, None] = {}
        for sentence in token_sentences:
            for token in sentence:
                words.setdefault(token, None)
                for ch in token:
                    chars.setdefault(ch, None)
        return cls(list(words), list(chars))

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_chars(self) -> int:
        return len(self.chars)

    def word_index(self, word: str) -> int:
        return self._word_to_id.get(word, 0)

    def char_indices(self, word: str) -> list[int]:
        if not word:
            return [1]  # PAD carries the char path for empty tokens
        return [self._char_to_id.get(c, 0) for c in word]

    def to_dict(self) -> dict:
        return {"words": self.words[2:], "chars": self.chars[2:]}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(data["words"], data["chars"])


class ModelParams:
    """Every trainable tensor of the tagger, each with its gradient slot."""

    def __init__(self, config: EncoderConfig, n_words: int, n_chars: int, n_labels: int,
                 seed: int = 0):
        self.config = config
        self.n_labels = n_labels
        rng = np.random.default_rng(seed)

        def uniform(shape):
            return rng.uniform(-0.1, 0.1, size=shape)

        h, d_in = config.hidden_dim, config.input_dim
        self.word_emb = Parameter("word_emb", uniform((n_words, config.word_dim)))
        self.char_emb = Parameter("char_emb", uniform((n_chars, config.char_dim)))
        self.cnn_w = Parameter("cnn_w", uniform((config.cnn_filters, config.cnn_width * config.char_dim)))
        self.cnn_b = Parameter("cnn_b", uniform(config.cnn_filters))
        self.lstm_fw_W = Parameter("lstm_fw_W", uniform((4 * h, d_in + h)))
        self.lstm_fw_b = Parameter("lstm_fw_b", uniform(4 * h))
        self.lstm_bw_W = Parameter("lstm_bw_W", uniform((4 * h, d_in + h)))
        self.lstm_bw_b = Parameter("lstm_bw_b", uniform(4 * h))
        # forget-gate bias starts at 1.0 to keep early memory open
        self.lstm_fw_b.value[h : 2 * h] = 1.0
        self.lstm_bw_b.value[h : 2 * h] = 1.0
        self.proj_W = Parameter("proj_W", uniform((n_labels, config.output_dim)))
        self.proj_b = Parameter("proj_b", uniform(n_labels))
        self.trans = Parameter("trans", uniform((n_labels + 2, n_labels + 2)))

    def parameters(self) -> list[Parameter]:
        return [
            self.word_emb, self.char_emb, self.cnn_w, self.cnn_b,
            self.lstm_fw_W, self.lstm_fw_b, self.lstm_bw_W, self.lstm_bw_b,
            self.proj_W, self.proj_b, self.trans,
        ]

    def encoder_parameters(self) -> list[Parameter]:
        """All parameters except the transition matrix."""
        return [p for p in self.parameters() if p is not self.trans]

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            p.value[...] = snapshot[p.name]


def load_pretrained_word_vectors(params: ModelParams, vocab: Vocabulary, path) -> int:
    """Overwrite embedding rows from a ``word v1 .. vN`` text file.

    Returns the number of vocabulary words that received a vector. Vectors
    of the wrong dimensionality raise; unknown words are skipped.
    """
    dim = params.config.word_dim
    loaded = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values for {word!r}, got {len(values)}"
                )
            idx = vocab.word_index(word)
            if idx == 0 and word != Vocabulary.UNK:
                continue
            params.word_emb.value[idx] = np.asarray([float(v) for v in values])
            loaded += 1
    return loaded


def embed_word(
    word: str,
    params: ModelParams,
    vocab: Vocabulary,
    tape: Tape,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Var:
    """Concatenate the word embedding with the max-pooled char-CNN features.

    The char path convolves width-w windows over zero-padded character
    embeddings, max-pools over positions, and applies inverted dropout when
    training.
    """
    cfg = params.config
    word_idx = vocab.word_index(word)
    char_idx = np.asarray(vocab.char_indices(word), dtype=np.intp)
    emb = params.char_emb.value[char_idx]  # (k, char_dim)
    k = emb.shape[0]
    pad = cfg.cnn_width // 2
    padded = np.zeros((k + 2 * pad, cfg.char_dim))
    padded[pad : pad + k] = emb
    windows = np.empty((k, cfg.cnn_width * cfg.char_dim))
    for i in range(k):
        windows[i] = padded[i : i + cfg.cnn_width].ravel()
    conv = windows @ params.cnn_w.value.T + params.cnn_b.value  # (k, filters)
    arg_rows = conv.argmax(axis=0)
    pooled = conv[arg_rows, np.arange(cfg.cnn_filters)]
    if train:
        if rng is None:
            raise ContractViolation("training-mode embedding needs an rng for dropout")
        keep = 1.0 - cfg.dropout
        mask = (rng.random(cfg.cnn_filters) < keep) / keep
        char_vec = pooled * mask
    else:
        mask = None
        char_vec = pooled
    out = Var(np.concatenate([params.word_emb.value[word_idx], char_vec]))

    def backward():
        if out.grad is None:
            return
        g = out.grad
        params.word_emb.grad[word_idx] += g[: cfg.word_dim]
        g_char = g[cfg.word_dim :]
        if mask is not None:
            g_char = g_char * mask
        d_conv = np.zeros_like(conv)
        d_conv[arg_rows, np.arange(cfg.cnn_filters)] = g_char
        params.cnn_b.grad += g_char
        params.cnn_w.grad += d_conv.T @ windows
        d_windows = d_conv @ params.cnn_w.value  # (k, width*char_dim)
        d_padded = np.zeros_like(padded)
        for i in range(k):
            d_padded[i : i + cfg.cnn_width] += d_windows[i].reshape(cfg.cnn_width, cfg.char_dim)
        np.add.at(params.char_emb.grad, char_idx, d_padded[pad : pad + k])

    tape.record(backward)
    return out


def _lstm_forward(xs: np.ndarray, W: np.ndarray, b: np.ndarray, hidden: int):
    """Run one direction over (T, input) rows; returns outputs and caches."""
    n_steps = xs.shape[0]
    h_prev = np.zeros(hidden)
    c_prev = np.zeros(hidden)
    hs = np.empty((n_steps, hidden))
    caches = []
    for t in range(n_steps):
        inp = np.concatenate([xs[t], h_prev])
        z = W @ inp + b
        i_g = _sigmoid(z[:hidden])
        f_g = _sigmoid(z[hidden : 2 * hidden])
        g_g = np.tanh(z[2 * hidden : 3 * hidden])
        o_g = _sigmoid(z[3 * hidden :])
        c = f_g * c_prev + i_g * g_g
        tanh_c = np.tanh(c)
        h = o_g * tanh_c
        caches.append((inp, c_prev, i_g, f_g, g_g, o_g, tanh_c))
        hs[t] = h
        h_prev, c_prev = h, c
    return hs, caches


def _lstm_backward(d_hs: np.ndarray, caches, W: Parameter, b: Parameter, hidden: int,
                   input_dim: int) -> np.ndarray:
    """Backpropagate through one direction; returns input gradients (T, input)."""
    n_steps = d_hs.shape[0]
    d_xs = np.empty((n_steps, input_dim))
    d_h_next = np.zeros(hidden)
    d_c_next = np.zeros(hidden)
    d_zs = np.empty((n_steps, 4 * hidden))
    inps = np.empty((n_steps, input_dim + hidden))
    for t in range(n_steps - 1, -1, -1):
        inp, c_prev, i_g, f_g, g_g, o_g, tanh_c = caches[t]
        d_h = d_hs[t] + d_h_next
        d_o = d_h * tanh_c
        d_c = d_h * o_g * (1.0 - tanh_c * tanh_c) + d_c_next
        d_f = d_c * c_prev
        d_i = d_c * g_g
        d_g = d_c * i_g
        d_z = np.concatenate([
            d_i * i_g * (1.0 - i_g),
            d_f * f_g * (1.0 - f_g),
            d_g * (1.0 - g_g * g_g),
            d_o * o_g * (1.0 - o_g),
        ])
        d_inp = W.value.T @ d_z
        d_xs[t] = d_inp[:input_dim]
        d_h_next = d_inp[input_dim:]
        d_c_next = d_c * f_g
        d_zs[t] = d_z
        inps[t] = inp
    W.grad += d_zs.T @ inps
    b.grad += d_zs.sum(axis=0)
    return d_xs


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def encode_sequence(word_vars: list[Var], params: ModelParams, tape: Tape) -> Var:
    """Bi-directional recurrent encoding; row i is [forward_i ; backward_i]."""
    if not word_vars:
        raise DataError("cannot encode an empty sequence")
    cfg = params.config
    h = cfg.hidden_dim
    xs = np.stack([v.value for v in word_vars])
    hs_fw, caches_fw = _lstm_forward(xs, params.lstm_fw_W.value, params.lstm_fw_b.value, h)
    hs_bw_rev, caches_bw = _lstm_forward(xs[::-1], params.lstm_bw_W.value, params.lstm_bw_b.value, h)
    out = Var(np.concatenate([hs_fw, hs_bw_rev[::-1]], axis=1))

    def backward():
        if out.grad is None:
            return
        d_fw = out.grad[:, :h]
        d_bw_rev = out.grad[:, h:][::-1]
        d_xs = _lstm_backward(d_fw, caches_fw, params.lstm_fw_W, params.lstm_fw_b, h,
                              cfg.input_dim)
        d_xs = d_xs + _lstm_backward(d_bw_rev, caches_bw, params.lstm_bw_W, params.lstm_bw_b,
                                     h, cfg.input_dim)[::-1]
        for t, v in enumerate(word_vars):
            v.accumulate(d_xs[t])

    tape.record(backward)
    return out


def emission_log_probs(encoded: Var, params: ModelParams, tape: Tape) -> Var:
    """Project encoder outputs to per-label log-probabilities (row-normalized)."""
    H = encoded.value
    scores = H @ params.proj_W.value.T + params.proj_b.value  # (T, |Y|)
    m = scores.max(axis=1, keepdims=True)
    log_z = m + np.log(np.exp(scores - m).sum(axis=1, keepdims=True))
    out = Var(scores - log_z)

    def backward():
        if out.grad is None:
            return
        d_log = out.grad
        d_scores = d_log - np.exp(out.value) * d_log.sum(axis=1, keepdims=True)
        params.proj_W.grad += d_scores.T @ H
        params.proj_b.grad += d_scores.sum(axis=0)
        encoded.accumulate(d_scores @ params.proj_W.value)

    tape.record(backward)
    return out


def run_encoder(
    tokens,
    params: ModelParams,
    vocab: Vocabulary,
    tape: Tape,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Var:
    """Full forward pass from raw tokens to emission log-probabilities."""
    tokens = list(tokens)
    if not tokens:
        raise DataError("cannot encode an empty sentence")
    if len(tokens) > params.config.max_sentence_length:
        raise DataError(
            f"sentence of {len(tokens)} tokens exceeds the cap of "
            f"{params.config.max_sentence_length}; truncate at load time"
        )
    word_vars = [embed_word(w, params, vocab, tape, train=train, rng=rng) for w in tokens]
    encoded = encode_sequence(word_vars, params, tape)
    return emission_log_probs(encoded, params, tape)


def gather_log_probs(emissions: Var, targets: list[tuple[int, int]], tape: Tape) -> Var:
    """Negative sum of emission log-probabilities at (position, label) pairs."""
    pos = np.asarray([p for p, _ in targets], dtype=np.intp)
    lab = np.asarray([l for _, l in targets], dtype=np.intp)
    out = Var(-emissions.value[pos, lab].sum())

    def backward():
        if out.grad is None:
            return
        d = np.zeros_like(emissions.value)
        np.add.at(d, (pos, lab), -float(out.grad))
        emissions.accumulate(d)

    tape.record(backward)
    return out


def classification_loss(
    batch,
    params: ModelParams,
    vocab: Vocabulary,
    type_system: TypeSystem,
    tape: Tape,
    train: bool = True,
    rng: np.random.Generator | None = None,
) -> Var:
    """Cross-entropy over annotated tokens plus sampled-O positions.

    ``batch`` is a list of (sentence, sampled_positions) pairs. Tokens whose
    weak label is UN or NT contribute nothing unless sampled, in which case
    their training target is O. Sentences without any target are skipped;
    an all-skipped batch yields a zero loss with no gradient.
    """
    outside = type_system.label_index(OUTSIDE)
    terms = []
    for sentence, sampled in batch:
        targets = [
            (i, type_system.label_index(lab))
            for i, lab in enumerate(sentence.weak_labels)
            if type_system.is_strong(lab)
        ]
        targets.extend((i, outside) for i in sorted(sampled))
        if not targets:
            continue
        emissions = run_encoder(sentence.tokens, params, vocab, tape, train=train, rng=rng)
        terms.append(gather_log_probs(emissions, targets, tape))
    return add_all(tape, terms)
