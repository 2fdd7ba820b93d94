"""Forward-only location-sensitive attention and the stop-token rule.

One step scores each source position i with

    e_i = v . tanh(W_q q + W_k k_i + W_f f_i)

where f_i are convolutional features of the previous and cumulative
alignments at i, then takes a softmax over i. The dual variant runs two
independent heads (encoder and BERT memories) and concatenates their
contexts, encoder first. Nothing here trains; parameters come from callers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmptySourceError, ProbabilityRangeError

STOP_THRESHOLD = 0.5

_MATRIX_NAMES = ("query_weights", "key_weights", "location_filters", "location_weights",
                 "score_vector")


@dataclass(frozen=True, eq=False)
class AttentionParams:
    query_weights: np.ndarray     # (attn_dim, query_dim)
    key_weights: np.ndarray       # (attn_dim, key_dim)
    location_filters: np.ndarray  # (n_filters, 2, kernel); channel 0 = prev, 1 = cumulative
    location_weights: np.ndarray  # (attn_dim, n_filters)
    score_vector: np.ndarray      # (attn_dim,)

    def __post_init__(self):
        for name in _MATRIX_NAMES:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        a = self.attn_dim
        if self.query_weights.ndim != 2 or self.key_weights.ndim != 2:
            raise DimensionMismatchError("query/key weights must be 2-D")
        if self.query_weights.shape[0] != a or self.key_weights.shape[0] != a:
            raise DimensionMismatchError("query/key weights must have attn_dim rows")
        if self.location_filters.ndim != 3 or self.location_filters.shape[1] != 2:
            raise DimensionMismatchError("location_filters must have shape (n_filters, 2, kernel)")
        if self.location_filters.shape[2] % 2 == 0:
            raise DimensionMismatchError("location kernel width must be odd")
        if self.location_weights.shape != (a, self.location_filters.shape[0]):
            raise DimensionMismatchError("location_weights must be (attn_dim, n_filters)")
        if min(a, self.query_dim, self.key_dim, self.location_filters.shape[0]) < 1:
            raise DimensionMismatchError("all dimensions must be >= 1")

    @property
    def attn_dim(self) -> int:
        return self.score_vector.shape[0]

    @property
    def query_dim(self) -> int:
        return self.query_weights.shape[1]

    @property
    def key_dim(self) -> int:
        return self.key_weights.shape[1]

    @property
    def kernel(self) -> int:
        return self.location_filters.shape[2]

    @classmethod
    def random(cls, query_dim, key_dim, attn_dim=128, n_filters=32, kernel=31,
               rng=None, scale=0.1) -> "AttentionParams":
        rng = np.random.default_rng(rng)
        return cls(
            query_weights=rng.normal(0, scale, (attn_dim, query_dim)),
            key_weights=rng.normal(0, scale, (attn_dim, key_dim)),
            location_filters=rng.normal(0, scale, (n_filters, 2, kernel)),
            location_weights=rng.normal(0, scale, (attn_dim, n_filters)),
            score_vector=rng.normal(0, scale, attn_dim),
        )


@dataclass(frozen=True, eq=False)
class AttentionState:
    cumulative_weights: np.ndarray
    prev_weights: np.ndarray

    @classmethod
    def initial(cls, n_source: int) -> "AttentionState":
        return cls(np.zeros(n_source), np.zeros(n_source))

    def __len__(self):
        return self.prev_weights.shape[0]


@dataclass(frozen=True, eq=False)
class DualContext:
    context: np.ndarray
    enc_weights: np.ndarray
    bert_weights: np.ndarray
    enc_state: AttentionState
    bert_state: AttentionState


def location_features(state: AttentionState, params: AttentionParams) -> np.ndarray:
    """Same-length convolution of [prev; cumulative]; returns (n_source, n_filters)."""
    prev = np.asarray(state.prev_weights, dtype=np.float64)
    cum = np.asarray(state.cumulative_weights, dtype=np.float64)
    if prev.ndim != 1 or prev.shape != cum.shape:
        raise DimensionMismatchError("prev and cumulative weights must be equal-length vectors")
    half = params.kernel // 2
    stacked = np.pad(np.stack([prev, cum]), ((0, 0), (half, half)))
    windows = np.lib.stride_tricks.sliding_window_view(stacked, params.kernel, axis=1)
    return np.einsum("cnk,fck->nf", windows, params.location_filters)


def softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(x - x.max())
    return z / z.sum()


def attention_energies(query, keys, state: AttentionState, params: AttentionParams) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64)
    keys = np.atleast_2d(np.asarray(keys, dtype=np.float64))
    if query.shape != (params.query_dim,):
        raise DimensionMismatchError(f"query has shape {query.shape}, expected ({params.query_dim},)")
    if keys.shape[1] != params.key_dim:
        raise DimensionMismatchError(f"keys have dim {keys.shape[1]}, expected {params.key_dim}")
    if len(state) != keys.shape[0]:
        raise DimensionMismatchError("attention state length differs from source length")
    loc = location_features(state, params)
    hidden = np.tanh(params.query_weights @ query + keys @ params.key_weights.T
                     + loc @ params.location_weights.T)
    return hidden @ params.score_vector


def attention_step(query, keys, values, state: AttentionState | None, params: AttentionParams):
    """One decoder step: returns ``(context, weights, new_state)``."""
    keys = np.asarray(keys, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if keys.ndim != 2 or keys.shape[0] == 0:
        raise EmptySourceError("attention needs at least one source step")
    if values.ndim != 2 or values.shape[0] != keys.shape[0]:
        raise DimensionMismatchError("keys and values must have the same number of steps")
    if state is None:
        state = AttentionState.initial(keys.shape[0])
    weights = softmax(attention_energies(query, keys, state, params))
    context = weights @ values
    new_state = AttentionState(np.asarray(state.cumulative_weights) + weights, weights)
    return context, weights, new_state


def dual_attention_step(query, enc_keys, enc_values, bert_keys, bert_values,
                        enc_state, bert_state, params_enc, params_bert) -> DualContext:
    enc_ctx, enc_w, enc_next = attention_step(query, enc_keys, enc_values, enc_state, params_enc)
    bert_ctx, bert_w, bert_next = attention_step(query, bert_keys, bert_values, bert_state,
                                                 params_bert)
    return DualContext(np.concatenate([enc_ctx, bert_ctx]), enc_w, bert_w, enc_next, bert_next)


def stop_decision(stop_prob: float) -> bool:
    """True when the stop-token probability strictly exceeds 0.5."""
    if not 0.0 <= stop_prob <= 1.0:
        raise ProbabilityRangeError(f"stop probability {stop_prob} outside [0, 1]")
    return stop_prob > STOP_THRESHOLD


def load_params(manifest_path) -> AttentionParams:
    """Load a parameter bundle: JSON manifest plus one CSV per matrix.

    The manifest looks like ``{"matrices": {"query_weights": {"file":
    "wq.csv", "shape": [128, 1024]}, ...}}``. CSV files hold the array
    reshaped to (shape[0], -1); paths are relative to the manifest.
    """
    manifest_path = Path(manifest_path)
    bundle = json.loads(manifest_path.read_text())
    matrices = bundle.get("matrices", {})
    missing = [n for n in _MATRIX_NAMES if n not in matrices]
    if missing:
        raise DimensionMismatchError(f"parameter bundle lacks {missing}")
    arrays = {}
    for name in _MATRIX_NAMES:
        entry = matrices[name]
        data = np.loadtxt(manifest_path.parent / entry["file"], delimiter=",", ndmin=2)
        shape = tuple(entry["shape"])
        if data.size != int(np.prod(shape)):
            raise DimensionMismatchError(f"{name}: {data.size} values do not fit shape {shape}")
        arrays[name] = data.reshape(shape)
    return AttentionParams(**arrays)


def save_params(manifest_path, params: AttentionParams) -> None:
    manifest_path = Path(manifest_path)
    entries = {}
    for name in _MATRIX_NAMES:
        arr = getattr(params, name)
        fname = f"{manifest_path.stem}.{name}.csv"
        np.savetxt(manifest_path.parent / fname, arr.reshape(arr.shape[0], -1) if arr.ndim > 1
                   else arr[None, :], delimiter=",", fmt="%.17g")
        entries[name] = {"file": fname, "shape": list(arr.shape)}
    manifest_path.write_text(json.dumps({"matrices": entries}, indent=2))
