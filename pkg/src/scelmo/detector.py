"""Per-bug-pattern binary classifier.

One hidden layer of 200 ReLU units, sigmoid output, dropout 0.2 on input and
hidden activations, binary cross-entropy under RMSProp with batch size 50 for
10 epochs. The input is the concatenation of slot vectors from a feature
provider (4 slots for calls, 3 for binary expressions). Static providers do
not embed operators, so for those the model owns a small learned operator
embedding table that trains jointly with the network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProviderError, TrainingError
from .extraction import BINOP_SLOTS, CALL_SLOTS, CodeInstance
from .nn import RmsProp, assert_finite, dropout_mask, glorot, sigmoid
from .serialization import MAGIC_DETECTOR, read_container, write_container

HIDDEN = 200
OP_UNSEEN = 0  # row 0 of the operator table serves operators unseen in training


@dataclass
class EvalReport:
    accuracy: float | None = None
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    recall: float | None = None
    fpr: float | None = None
    skipped: int = 0
    threshold: float = 0.5

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy, "tp": self.tp, "tn": self.tn,
            "fp": self.fp, "fn": self.fn, "recall": self.recall,
            "fpr": self.fpr, "skipped": self.skipped, "threshold": self.threshold,
        }


@dataclass
class DetectorModel:
    pattern: str
    mode: str                  # provider binding
    dim: int                   # per-slot feature width
    w1: np.ndarray             # (input_dim, HIDDEN)
    b1: np.ndarray
    w2: np.ndarray             # (HIDDEN, 1)
    b2: np.ndarray
    threshold: float = 0.5
    dropout: float = 0.2
    op_vocab: list[str] = field(default_factory=list)
    op_table: np.ndarray | None = None
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def slots(self) -> tuple[str, ...]:
        return CALL_SLOTS if self.pattern == "swapped_args" else BINOP_SLOTS

    @property
    def input_dim(self) -> int:
        return len(self.slots) * self.dim

    @property
    def uses_op_table(self) -> bool:
        return self.op_table is not None

    def op_id(self, op: str) -> int:
        try:
            return self.op_vocab.index(op) + 1
        except ValueError:
            return OP_UNSEEN

    @classmethod
    def init(cls, pattern: str, mode: str, dim: int, seed: int,
             op_vocab: list[str] | None = None, dropout: float = 0.2) -> "DetectorModel":
        slots = CALL_SLOTS if pattern == "swapped_args" else BINOP_SLOTS
        input_dim = len(slots) * dim
        rng = np.random.default_rng(seed)
        model = cls(
            pattern=pattern, mode=mode, dim=dim,
            w1=glorot(rng, input_dim, HIDDEN, (input_dim, HIDDEN)),
            b1=np.zeros(HIDDEN),
            w2=glorot(rng, HIDDEN, 1, (HIDDEN, 1)),
            b2=np.zeros(1),
            dropout=dropout,
        )
        if op_vocab is not None:
            model.op_vocab = list(op_vocab)
            model.op_table = rng.uniform(-0.5 / dim, 0.5 / dim,
                                         size=(len(op_vocab) + 1, dim))
        return model

    def params(self) -> dict[str, np.ndarray]:
        out = {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}
        if self.op_table is not None:
            out["op_table"] = self.op_table
        return out


def _op_slice(model: DetectorModel) -> slice:
    idx = model.slots.index("op")
    return slice(idx * model.dim, (idx + 1) * model.dim)


def assemble_input(model: DetectorModel, instance: CodeInstance, provider) -> np.ndarray:
    """Concatenate slot vectors in fixed order; width = arity * dim."""
    if instance.pattern != model.pattern:
        raise ProviderError(
            f"pattern mismatch: model {model.pattern}, instance {instance.pattern}")
    fv = provider.feature_vector(instance)
    parts = []
    for slot in model.slots:
        vec = fv.vectors[slot]
        if vec is None:
            if not model.uses_op_table:
                raise ProviderError(
                    f"provider {provider.name} left slot {slot!r} unfilled")
            vec = model.op_table[model.op_id(instance.elements[slot])]
        if vec.shape[0] != model.dim:
            raise ProviderError(
                f"slot {slot!r} has width {vec.shape[0]}, expected {model.dim}")
        parts.append(vec)
    return np.concatenate(parts)


def _assemble_matrix(model: DetectorModel, instances, provider):
    """Feature matrix plus operator ids (op column left zeroed when learned)."""
    X = np.zeros((len(instances), model.input_dim))
    op_ids = np.zeros(len(instances), dtype=np.int64) if model.uses_op_table else None
    for i, inst in enumerate(instances):
        if inst.pattern != model.pattern:
            raise ProviderError(
                f"pattern mismatch: model {model.pattern}, instance {inst.pattern}")
        fv = provider.feature_vector(inst)
        parts = []
        for slot in model.slots:
            vec = fv.vectors[slot]
            if vec is None:
                vec = np.zeros(model.dim)  # filled per batch from the live table
                op_ids[i] = model.op_id(inst.elements[slot])
            parts.append(vec)
        X[i] = np.concatenate(parts)
    assert_finite("features", X)
    return X, op_ids


def _forward(model: DetectorModel, X: np.ndarray,
             mask_in: np.ndarray | None = None, mask_hid: np.ndarray | None = None):
    Xd = X if mask_in is None else X * mask_in
    z1 = Xd @ model.w1 + model.b1
    h = np.maximum(z1, 0.0)
    hd = h if mask_hid is None else h * mask_hid
    z2 = hd @ model.w2 + model.b2
    return Xd, z1, h, hd, z2


def detector_loss_and_grads(model: DetectorModel, X: np.ndarray, y: np.ndarray,
                            op_ids: np.ndarray | None = None,
                            mask_in: np.ndarray | None = None,
                            mask_hid: np.ndarray | None = None):
    """Mean binary cross-entropy and gradients for one batch.

    When the model owns an operator table, ``op_ids`` selects rows that are
    written into the op slice of X before the forward pass, and the gradient
    flows back into the table.
    """
    X = np.array(X, copy=True)
    if op_ids is not None:
        X[:, _op_slice(model)] = model.op_table[op_ids]
    Xd, z1, h, hd, z2 = _forward(model, X, mask_in, mask_hid)
    z = z2[:, 0]
    n = len(y)
    # softplus form of BCE on logits: stable for large |z|
    loss = float(np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))
    p = sigmoid(z)
    dz = (p - y)[:, None] / n
    grads = {
        "w2": hd.T @ dz,
        "b2": dz.sum(axis=0),
        "b1": None, "w1": None,
    }
    dh = dz @ model.w2.T
    if mask_hid is not None:
        dh = dh * mask_hid
    dz1 = dh * (z1 > 0)
    grads["w1"] = Xd.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    if op_ids is not None:
        dX = dz1 @ model.w1.T
        if mask_in is not None:
            dX = dX * mask_in
        d_op = np.zeros_like(model.op_table)
        np.add.at(d_op, op_ids, dX[:, _op_slice(model)])
        grads["op_table"] = d_op
    return loss, grads


def train_detector(dataset: list[CodeInstance], provider, seed: int,
                   epochs: int = 10, batch: int = 50, lr: float = 0.001,
                   dropout: float = 0.2, shuffle_labels: bool = False) -> DetectorModel:
    """Train a classifier on a 50/50 labeled dataset; deterministic per seed.

    ``shuffle_labels`` permutes the training labels (null control)."""
    if not dataset:
        raise TrainingError("empty training dataset")
    patterns = {inst.pattern for inst in dataset}
    if len(patterns) > 1:
        raise TrainingError(f"mixed patterns in dataset: {sorted(patterns)}")
    pattern = patterns.pop()

    op_vocab = None
    if pattern != "swapped_args" and not provider.handles_operator:
        op_vocab = sorted({inst.elements["op"] for inst in dataset})
    model = DetectorModel.init(pattern, provider.name, provider.dim, seed,
                               op_vocab=op_vocab, dropout=dropout)

    X, op_ids = _assemble_matrix(model, dataset, provider)
    y = np.array([1.0 if inst.label == "buggy" else 0.0 for inst in dataset])
    rng = np.random.default_rng(seed + 17)
    if shuffle_labels:
        y = y[rng.permutation(len(y))]

    params = model.params()
    opt = RmsProp(params, lr=lr)
    for _ in range(epochs):
        order = rng.permutation(len(y))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(order), batch):
            idx = order[start:start + batch]
            mask_in = dropout_mask(rng, (len(idx), model.input_dim), dropout)
            mask_hid = dropout_mask(rng, (len(idx), HIDDEN), dropout)
            loss, grads = detector_loss_and_grads(
                model, X[idx], y[idx],
                op_ids=op_ids[idx] if op_ids is not None else None,
                mask_in=mask_in, mask_hid=mask_hid)
            opt.step(params, grads)
            epoch_loss += loss
            batches += 1
        mean = epoch_loss / max(batches, 1)
        if not np.isfinite(mean):
            raise TrainingError("detector training diverged (non-finite loss)")
        model.epoch_losses.append(float(mean))
    return model


def predict_proba(model: DetectorModel, X: np.ndarray,
                  op_ids: np.ndarray | None = None) -> np.ndarray:
    X = np.array(X, copy=True)
    if op_ids is not None:
        X[:, _op_slice(model)] = model.op_table[op_ids]
    _, _, _, _, z2 = _forward(model, X)  # no dropout at inference
    return sigmoid(z2[:, 0])


def predict(model: DetectorModel, instance: CodeInstance, provider) -> float:
    """Probability that the instance is buggy (dropout disabled)."""
    x = assemble_input(model, instance, provider)
    _, _, _, _, z2 = _forward(model, x[None, :])
    return float(sigmoid(z2[0, 0]))


def evaluate(model: DetectorModel, dataset: list[CodeInstance], provider,
             threshold: float = 0.5) -> EvalReport:
    """Accuracy on a labeled set; ties (p == threshold) classify as buggy."""
    X, op_ids = _assemble_matrix(model, dataset, provider)
    probs = predict_proba(model, X, op_ids)
    report = EvalReport(threshold=threshold)
    for inst, p in zip(dataset, probs):
        flagged = p >= threshold
        buggy = inst.label == "buggy"
        if buggy and flagged:
            report.tp += 1
        elif buggy:
            report.fn += 1
        elif flagged:
            report.fp += 1
        else:
            report.tn += 1
    report.accuracy = (report.tp + report.tn) / report.total if report.total else None
    return report


def evaluate_real_bugs(predict_fn, pairs, threshold: float = 0.75) -> EvalReport:
    """Recall/FPR over (buggy, fixed) instance pairs at a strict > threshold.

    ``predict_fn`` maps an instance to a bug probability. Pairs that raise
    ProviderError (unservable/corrupt) are skipped and counted.
    """
    if not pairs:
        raise TrainingError("empty real-bug pair list")
    report = EvalReport(threshold=threshold)
    for buggy, fixed in pairs:
        try:
            p_buggy = predict_fn(buggy)
            p_fixed = predict_fn(fixed)
        except ProviderError:
            report.skipped += 1
            continue
        if p_buggy > threshold:
            report.tp += 1
        else:
            report.fn += 1
        if p_fixed > threshold:
            report.fp += 1
        else:
            report.tn += 1
    buggy_n = report.tp + report.fn
    fixed_n = report.fp + report.tn
    report.recall = report.tp / buggy_n if buggy_n else None
    report.fpr = report.fp / fixed_n if fixed_n else None
    return report


def save_detector(path, model: DetectorModel, config: dict, seed: int | None) -> None:
    header = {
        "seed": seed, "config": config, "pattern": model.pattern,
        "mode": model.mode, "dim": model.dim, "threshold": model.threshold,
        "dropout": model.dropout, "op_vocab": model.op_vocab,
        "epoch_losses": model.epoch_losses,
    }
    write_container(path, MAGIC_DETECTOR, header, model.params())


def load_detector(path) -> tuple[DetectorModel, dict]:
    header, arrays = read_container(path, MAGIC_DETECTOR)
    model = DetectorModel(
        pattern=header["pattern"], mode=header["mode"], dim=int(header["dim"]),
        w1=arrays["w1"], b1=arrays["b1"], w2=arrays["w2"], b2=arrays["b2"],
        threshold=float(header.get("threshold", 0.5)),
        dropout=float(header.get("dropout", 0.2)),
        op_vocab=list(header.get("op_vocab", [])),
        op_table=arrays.get("op_table"),
        epoch_losses=list(header.get("epoch_losses", [])),
    )
    return model, header
