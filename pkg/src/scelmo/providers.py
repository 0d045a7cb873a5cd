"""Feature providers: fixed slot vectors per instance for the classifiers.

Three families share one interface. Static tables embed element names
directly (their operator slot is left to the classifier's learned operator
table). The no-context LM provider builds a short synthetic token query from
the element names alone. The contextual provider runs the LM over the token
window of the instance's file and reads the states at the recorded feature
positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProviderError
from .extraction import CodeInstance
from .lm import CollapseWeights, LayerStates, LmModel, collapse, layer_states
from .static_embeddings import EmbeddingTable

STATIC_MODES = ("random", "cbow", "fasttext")
LM_MODES = ("nocontext-elmo", "scelmo")
ALL_MODES = STATIC_MODES + LM_MODES


@dataclass
class FeatureVector:
    """Slot-ordered vectors for one instance; static providers leave the
    operator slot as None for the classifier to fill."""

    pattern: str
    slots: tuple[str, ...]
    vectors: dict[str, np.ndarray | None]
    provider: str

    def matrix(self) -> np.ndarray:
        return np.stack([self.vectors[s] for s in self.slots])


class StaticProvider:
    """Adapter from an embedding table to the provider interface."""

    handles_operator = False

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.name = table.method
        self.dim = table.dim

    def feature_vector(self, instance: CodeInstance) -> FeatureVector:
        vectors: dict[str, np.ndarray | None] = {}
        for slot in instance.slots:
            if slot == "op":
                vectors[slot] = None  # learned operator table lives in the detector
                continue
            missing = instance.missing.get(slot, False)
            vectors[slot] = self.table.missing_vector() if missing \
                else self.table.vector(instance.elements[slot])
        return FeatureVector(instance.pattern, instance.slots, vectors, self.name)


class _LmProviderBase:
    handles_operator = True

    def __init__(self, model: LmModel, weights: CollapseWeights | None = None):
        self.model = model
        self.weights = weights or CollapseWeights.equal(model.config.layers)
        self.dim = model.state_dim

    def _collapse_at(self, states: list[LayerStates], pos: int) -> np.ndarray:
        return collapse(states[pos], self.weights)

    def missing_vector(self) -> np.ndarray:
        # Dedicated constant for an absent base object.
        return np.zeros(self.dim)


class NoContextElmoProvider(_LmProviderBase):
    """Queries the LM with a synthetic token sequence built from element names.

    Calls become [base, ".", callee, "(", arg1, ",", arg2, ")"] (base and "."
    omitted when missing); binary expressions become [left, op, right]. A pure
    function of the element names: equal elements give identical vectors.
    """

    name = "nocontext-elmo"

    def query_tokens(self, instance: CodeInstance) -> tuple[list[str], dict[str, int]]:
        e = instance.elements
        if instance.pattern == "swapped_args":
            if instance.missing.get("base"):
                tokens = [e["callee"], "(", e["arg1"], ",", e["arg2"], ")"]
                slots = {"callee": 0, "arg1": 2, "arg2": 4}
            else:
                tokens = [e["base"], ".", e["callee"], "(", e["arg1"], ",", e["arg2"], ")"]
                slots = {"base": 0, "callee": 2, "arg1": 4, "arg2": 6}
            return tokens, slots
        return [e["left"], e["op"], e["right"]], {"left": 0, "op": 1, "right": 2}

    def feature_vector(self, instance: CodeInstance) -> FeatureVector:
        tokens, slot_pos = self.query_tokens(instance)
        states = layer_states(self.model, tokens)
        vectors: dict[str, np.ndarray | None] = {}
        for slot in instance.slots:
            if slot in slot_pos:
                vectors[slot] = self._collapse_at(states, slot_pos[slot])
            else:
                vectors[slot] = self.missing_vector()
        return FeatureVector(instance.pattern, instance.slots, vectors, self.name)


class ScelmoProvider(_LmProviderBase):
    """Contextual features: LM states sampled at the instance's token positions.

    The query window is the fixed-length chunk (the LM's training seq_len)
    containing the instance's first feature token, extended just enough to
    cover any later feature position. For binary-expression instances the
    operator element is substituted at the operator position before querying,
    so mutated instances are scored on the token stream they describe
    (a no-op for unmutated instances).
    """

    name = "scelmo"

    def __init__(self, model: LmModel, weights: CollapseWeights | None = None,
                 token_source=None, seq_len: int | None = None):
        super().__init__(model, weights)
        if token_source is None:
            raise ProviderError("scelmo provider needs a token source (file_id -> texts)")
        self.token_source = token_source
        self.seq_len = seq_len or model.config.seq_len
        self._window_cache: dict[tuple, list[LayerStates]] = {}

    def window_for(self, instance: CodeInstance) -> tuple[int, int, tuple]:
        positions = [p for p in instance.positions.values() if p is not None]
        if not positions:
            raise ProviderError(f"instance in {instance.path} has no feature positions")
        tokens = self.token_source(instance.file_id)
        first, last = min(positions), max(positions)
        if last >= len(tokens):
            raise ProviderError(
                f"corrupt instance: position {last} outside file {instance.path} "
                f"({len(tokens)} tokens)")
        start = (first // self.seq_len) * self.seq_len
        end = max(start + self.seq_len, last + 1)
        end = min(end, len(tokens))
        subs = ()
        if "op" in instance.positions and instance.positions["op"] is not None:
            op_pos = instance.positions["op"]
            if instance.elements["op"] != tokens[op_pos]:
                subs = ((op_pos - start, instance.elements["op"]),)
        return start, end, subs

    def _states_for_window(self, file_id: int, start: int, end: int,
                           subs: tuple) -> list[LayerStates]:
        key = (file_id, start, end, subs)
        states = self._window_cache.get(key)
        if states is None:
            texts = list(self.token_source(file_id)[start:end])
            for pos, text in subs:
                texts[pos] = text
            states = layer_states(self.model, texts)
            self._window_cache[key] = states
        return states

    def feature_vector(self, instance: CodeInstance) -> FeatureVector:
        start, end, subs = self.window_for(instance)
        states = self._states_for_window(instance.file_id, start, end, subs)
        vectors: dict[str, np.ndarray | None] = {}
        for slot in instance.slots:
            pos = instance.positions.get(slot)
            if pos is None or instance.missing.get(slot, False):
                vectors[slot] = self.missing_vector()
            else:
                vectors[slot] = self._collapse_at(states, pos - start)
        return FeatureVector(instance.pattern, instance.slots, vectors, self.name)


def corpus_token_source(corpus):
    cache: dict[int, list[str]] = {}

    def source(file_id: int) -> list[str]:
        texts = cache.get(file_id)
        if texts is None:
            texts = corpus.by_id(file_id).token_texts()
            cache[file_id] = texts
        return texts

    return source
