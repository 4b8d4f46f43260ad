"""Feed-forward syndrome classifier that predicts logical corrections.

The input is the 47-bit syndrome ``s_lec | s1 | s2``.  Each head is its own
binary classifier (ReLU hidden layers, two-way softmax output) trained by
mini-batch Adam on the summed cross entropy plus ``lambda`` times the sum of
per-layer weight-matrix L2 norms.

Heads predict, per logical bit, whether the extended lookup decoder's
correction must be flipped (``target="residual"``, the default) or the bit
itself (``target="raw"``).  ``heads="two"`` covers the control-block X bit
and the target-block Z bit, the two directions errors spread through the
CNOTs; ``heads="four"`` covers all four circuit-order bits.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import kernels, python_kernels
from .decoders import TableDecoder
from .harness import Records, simulate_records
from .noise import NoiseParams

DIMS = (47, 256, 512, 1024, 256, 2)
HEAD_BITS = {"two": (0, 3), "four": (0, 1, 2, 3)}
BIT_NAMES = ("gX", "gZc", "gXt", "gZ")   # circuit-order bit -> label name
FORMAT_VERSION = 1


# -- model -----------------------------------------------------------------

@dataclass
class MLPModel:
    weights: list[np.ndarray]   # weights[m] has shape (dims[m], dims[m+1])
    biases: list[np.ndarray]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def copy(self) -> MLPModel:
        return MLPModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases


def init_model(dims=DIMS, rng: np.random.Generator | None = None, dtype=np.float64) -> MLPModel:
    """Uniform weights in ``+-sqrt(6 / fan_in)``, zero biases."""
    rng = rng or np.random.default_rng(0)
    ws, bs = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(6.0 / a)
        ws.append(rng.uniform(-lim, lim, size=(a, b)).astype(dtype))
        bs.append(np.zeros(b, dtype=dtype))
    return MLPModel(ws, bs)


def zero_model(dims=DIMS) -> MLPModel:
    return MLPModel([np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])], [np.zeros(b) for b in dims[1:]])


def _forward(m: MLPModel, x: np.ndarray):
    acts = [x]
    h = x
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0)
        acts.append(h)
    return acts


def softmax(v: np.ndarray) -> np.ndarray:
    v = v - v.max(axis=-1, keepdims=True)
    e = np.exp(v)
    return e / e.sum(axis=-1, keepdims=True)


def logits(m: MLPModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=m.weights[0].dtype))
    if x.shape[1] != m.dims[0]:
        raise ValueError(f"input width {x.shape[1]} != {m.dims[0]}")
    return _forward(m, x)[-1]


def forward(m: MLPModel, x) -> np.ndarray:
    """Class probabilities, shape (batch, 2)."""
    return softmax(logits(m, x))


def _log_softmax(v: np.ndarray) -> np.ndarray:
    v = v - v.max(axis=-1, keepdims=True)
    return v - np.log(np.exp(v).sum(axis=-1, keepdims=True))


def _l2(w: np.ndarray) -> float:
    return float(np.linalg.norm(w.ravel()))


def loss(m: MLPModel, x, y, lam: float = 0.0) -> float:
    """Summed cross entropy over the batch plus ``lam`` times the weight L2 norms.

    ``y`` holds class indices (0/1) or one-hot rows.
    """
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty batch")
    onehot = y if y.ndim == 2 else np.eye(m.dims[-1])[y.astype(int)]
    ce = -float((onehot * _log_softmax(logits(m, x))).sum())
    return ce + lam * sum(_l2(w) for w in m.weights)


def gradients(m: MLPModel, x, y, lam: float = 0.0) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and its gradients with respect to weights and biases."""
    x = np.atleast_2d(np.asarray(x, dtype=m.weights[0].dtype))
    y = np.asarray(y)
    onehot = (y if y.ndim == 2 else np.eye(m.dims[-1])[y.astype(int)]).astype(x.dtype)
    acts = _forward(m, x)
    out = acts[-1]
    ce = -float((onehot * _log_softmax(out)).sum())
    delta = softmax(out) - onehot
    gw, gb = [None] * len(m.weights), [None] * len(m.weights)
    for i in range(len(m.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ m.weights[i].T) * (acts[i] > 0)
    reg = 0.0
    if lam:
        for i, w in enumerate(m.weights):
            n = _l2(w)
            reg += n
            if n > 0:
                gw[i] = gw[i] + lam * w / n
    return ce + lam * reg, gw, gb


def predict_bits(m: MLPModel, x) -> np.ndarray:
    """Argmax class with ties going to 0 (no correction)."""
    z = logits(m, x)
    return (z[:, 1] > z[:, 0]).astype(np.uint8)


# -- training --------------------------------------------------------------

@dataclass
class TrainConfig:
    batch_size: int = 30
    learning_rate: float = 1e-4
    lam: float = 1e-5
    epochs: int = 5
    seed: int = 0
    epsilon_schedule: tuple[float, ...] = (1e-4, 2.2e-4, 4.6e-4, 1e-3, 2.2e-3, 4.6e-3, 1e-2)
    shots_per_epsilon: int = 100000
    validation_fraction: float = 0.1
    dims: tuple[int, ...] = DIMS
    heads: str = "four"
    target: str = "residual"
    dtype: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.heads not in HEAD_BITS:
            raise ValueError(f"heads must be one of {sorted(HEAD_BITS)}")
        if self.target not in ("residual", "raw"):
            raise ValueError("target must be 'residual' or 'raw'")


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        # folded bias correction: lr * sqrt(1 - b2^t) / (1 - b1^t) on m / (sqrt(v) + eps')
        self.t += 1
        c2 = float(np.sqrt(1 - self.b2 ** self.t))
        step = self.lr * c2 / (1 - self.b1 ** self.t)
        eps = self.eps * c2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            k = kernels if p.dtype == np.float32 else python_kernels
            k.adam_step(p.reshape(-1), np.ascontiguousarray(g, dtype=p.dtype).reshape(-1), m.reshape(-1),
                        v.reshape(-1), self.b1, self.b2, step, eps)


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)


def train(m: MLPModel, x: np.ndarray, y: np.ndarray, cfg: TrainConfig,
          x_val: np.ndarray | None = None, y_val: np.ndarray | None = None,
          steps: int | None = None) -> tuple[MLPModel, History]:
    """Mini-batch Adam; returns a trained copy and per-epoch mean losses.

    Deterministic for a fixed ``cfg.seed``.  ``steps`` stops early after that
    many updates (the history then has a single entry).
    """
    m = m.copy()
    if len(x) == 0:
        raise ValueError("empty training set")
    dt = m.weights[0].dtype
    x = np.asarray(x, dtype=dt)
    y = np.asarray(y).astype(int)
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(m.params(), cfg.learning_rate)
    hist = History()
    done = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            val, gw, gb = gradients(m, x[idx], y[idx], cfg.lam)
            opt.step(m.params(), gw + gb)
            total += val
            done += 1
            if steps is not None and done >= steps:
                break
        hist.train_loss.append(total / len(x))
        if x_val is not None and len(x_val):
            hist.val_loss.append(_batched_loss(m, x_val, y_val) / len(x_val))
        if steps is not None and done >= steps:
            break
    return m, hist


def _batched_loss(m: MLPModel, x, y, chunk: int = 8192) -> float:
    return sum(loss(m, x[i:i + chunk], np.asarray(y[i:i + chunk]).astype(int), 0.0) for i in range(0, len(x), chunk))


# -- datasets --------------------------------------------------------------

@dataclass
class Dataset:
    features: np.ndarray    # (N, 47) uint8
    labels: np.ndarray      # (N, len(label_names)) uint8
    epsilon: np.ndarray     # (N,)
    label_names: tuple[str, ...] = ("gX", "gZ")

    def __len__(self) -> int:
        return len(self.features)

    def split(self, fraction: float) -> tuple[Dataset, Dataset]:
        """Validation membership by a hash of the syndrome, so duplicates stay together."""
        h = np.array([int.from_bytes(hashlib.blake2b(r.tobytes(), digest_size=8).digest(), "little")
                      for r in self.features], dtype=np.uint64)
        val = (h % np.uint64(10_000)) < np.uint64(round(fraction * 10_000))
        return self.subset(~val), self.subset(val)

    def subset(self, mask) -> Dataset:
        return Dataset(self.features[mask], self.labels[mask], self.epsilon[mask], self.label_names)


def record_labels(rec: Records, base: TableDecoder | None, heads: str, target: str) -> np.ndarray:
    """Label bits per head: raw error bits, or their XOR with the base decoder."""
    err = rec.raw if target == "raw" or base is None else rec.errors(base)
    return err[:, list(HEAD_BITS[heads])].astype(np.uint8)


def label_names(heads: str) -> tuple[str, ...]:
    return tuple(BIT_NAMES[b] for b in HEAD_BITS[heads])


def generate_dataset(circuit, cfg: TrainConfig, seed: int | None = None, base: TableDecoder | None = None,
                     workers: int = 1, convention: str = "three-quarter") -> Dataset:
    """Simulated records over ``cfg.epsilon_schedule``; all-zero syndromes are dropped."""
    seed = cfg.seed if seed is None else seed
    if cfg.target == "residual" and base is None:
        from .decoders import extended_lookup_decoder
        base = extended_lookup_decoder(circuit)
    feats, labs, eps = [], [], []
    for i, e in enumerate(cfg.epsilon_schedule):
        rec = simulate_records(circuit, NoiseParams(e, convention), cfg.shots_per_epsilon, seed, 1000 + i,
                               workers=workers)
        keep = rec.features.any(axis=1)
        feats.append(rec.features[keep])
        labs.append(record_labels(rec, base, cfg.heads, cfg.target)[keep])
        eps.append(np.full(int(keep.sum()), e))
    return Dataset(np.concatenate(feats), np.concatenate(labs), np.concatenate(eps), label_names(cfg.heads))


_FIELDS = "s_lec(20b);s1(7b);s2(20b)"


def write_dataset(ds: Dataset, path, header_extra: str = "") -> None:
    """One record per line: ``s_lec;s1;s2;<labels>;epsilon`` as ASCII."""
    lines = [f"# {_FIELDS};{';'.join(ds.label_names)};epsilon" + (f" | {header_extra}" if header_extra else "")]
    for f, lab, e in zip(ds.features, ds.labels, ds.epsilon):
        bits = "".join("01"[b] for b in f)
        lines.append(f"{bits[:20]};{bits[20:27]};{bits[27:]};{';'.join(str(int(v)) for v in lab)};{float(e)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(f"# {_FIELDS};"):
            raise ValueError(f"{path}: malformed dataset header")
        cols = header[2:].split(" | ")[0].split(";")
        if cols[-1] != "epsilon":
            raise ValueError(f"{path}: malformed dataset header")
        names = tuple(cols[3:-1])
        feats, labs, eps = [], [], []
        for ln, line in enumerate(fh, start=2):
            parts = line.strip().split(";")
            if len(parts) != 4 + len(names):
                raise ValueError(f"{path}:{ln}: expected {4 + len(names)} fields")
            bits = parts[0] + parts[1] + parts[2]
            if len(parts[0]) != 20 or len(parts[1]) != 7 or len(parts[2]) != 20 or set(bits) - {"0", "1"}:
                raise ValueError(f"{path}:{ln}: bad syndrome field")
            feats.append([int(c) for c in bits])
            labs.append([int(v) for v in parts[3:-1]])
            eps.append(float(parts[-1]))
    feats = np.array(feats, dtype=np.uint8).reshape(-1, 47)
    labs = np.array(labs, dtype=np.uint8).reshape(-1, len(names))
    return Dataset(feats, labs, np.array(eps, dtype=float), names)


# -- decoder and checkpoints -----------------------------------------------

@dataclass
class NNDecoder:
    """One model per head, optionally correcting a base table decoder."""

    models: list[MLPModel]
    heads: str = "four"
    target: str = "residual"
    base: TableDecoder | None = None
    name: str = "nn"

    def decode(self, s_lec, s1, s2) -> np.ndarray:
        if self.target == "residual" and self.base is None:
            raise ValueError("a residual decoder needs its base decoder (pass base= when loading)")
        x = np.concatenate([s_lec, s1, s2], axis=1)
        out = np.zeros((len(x), 4), dtype=np.uint8)
        nz = x.any(axis=1)
        if nz.any():
            for bit, m in zip(HEAD_BITS[self.heads], self.models):
                out[nz, bit] = _chunked_predict(m, x[nz])
        if self.target == "residual":
            out ^= self.base.decode(s_lec, s1, s2)
        return out


def _chunked_predict(m: MLPModel, x, chunk: int = 16384) -> np.ndarray:
    return np.concatenate([predict_bits(m, x[i:i + chunk]) for i in range(0, len(x), chunk)])


def predict(models: list[MLPModel], s) -> tuple[int, ...]:
    """Logical correction bits for one 47-bit syndrome, one per model."""
    x = np.asarray(s).reshape(1, -1)
    return tuple(int(predict_bits(m, x)[0]) for m in models)


def train_decoder(ds: Dataset, cfg: TrainConfig, base: TableDecoder | None = None
                  ) -> tuple[NNDecoder, list[History]]:
    if ds.label_names != label_names(cfg.heads):
        raise ValueError(f"dataset labels {ds.label_names} do not match heads={cfg.heads!r}")
    tr, va = ds.split(cfg.validation_fraction)
    models, hists = [], []
    for h in range(len(ds.label_names)):
        rng = np.random.default_rng([cfg.seed, h])
        m0 = init_model(cfg.dims, rng, np.dtype(cfg.dtype))
        hcfg = TrainConfig(**{**asdict(cfg), "seed": int(rng.integers(2**31))})
        m, hist = train(m0, tr.features, tr.labels[:, h], hcfg, va.features, va.labels[:, h])
        models.append(m)
        hists.append(hist)
    return NNDecoder(models, cfg.heads, cfg.target, base), hists


def save_checkpoint(path, dec: NNDecoder, meta: dict | None = None) -> None:
    """``.npz`` container: JSON metadata plus row-major weights and biases per head."""
    info = {"version": FORMAT_VERSION, "heads": dec.heads, "target": dec.target,
            "dims": [list(m.dims) for m in dec.models], **(meta or {})}
    arrays = {"meta": np.frombuffer(json.dumps(info, sort_keys=True).encode(), dtype=np.uint8)}
    for h, m in enumerate(dec.models):
        for i, (w, b) in enumerate(zip(m.weights, m.biases)):
            arrays[f"h{h}_w{i}"] = np.ascontiguousarray(w)
            arrays[f"h{h}_b{i}"] = b
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path, base: TableDecoder | None = None) -> tuple[NNDecoder, dict]:
    with np.load(path) as z:
        info = json.loads(bytes(z["meta"]).decode())
        if info.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {info.get('version')}")
        models = []
        for h, dims in enumerate(info["dims"]):
            n = len(dims) - 1
            models.append(MLPModel([z[f"h{h}_w{i}"] for i in range(n)], [z[f"h{h}_b{i}"] for i in range(n)]))
    return NNDecoder(models, info["heads"], info["target"], base), info
