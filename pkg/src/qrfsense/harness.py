"""Experiment orchestration: dataset generation, training, trials, metrics.

Everything is deterministic from the config: the dataset derives from one
seed, each trial from its own seed (initialisation, shuffling, dropout),
and metrics are written with round-trip float formatting so repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from . import baseline as bl
from . import model as md
from . import qsim
from .field import calibrate_time, interaction_params, interaction_unitary, superpose
from .optim import Adam, make_optimizer
from .raytracer import Path, PathSet, RadioConfig, trace_paths
from .scene import Scene, load_canonical_scene, load_scene, sample_locations

__all__ = [
    "ExperimentConfig",
    "SampleRecord",
    "EpochMetrics",
    "generate_dataset",
    "write_dataset",
    "load_dataset",
    "train_hybrid",
    "train_baseline",
    "run_trials",
    "evaluate",
    "write_metrics_csv",
    "METRICS_COLUMNS",
]

METRICS_COLUMNS = ("epoch", "trial", "train_loss_mean", "train_loss_accrued",
                   "test_loss", "test_accuracy")


@dataclass
class ExperimentConfig:
    scene_path: str = "canonical"
    target: str = "target_a"
    m: int = 2000
    train_fraction: float = 0.8
    batch_size: int = 64
    epochs: int = 50
    lr_hybrid: float = 0.003
    lr_baseline: float = 0.0001
    sampling_mode: str = "balanced"
    balanced_fraction: float = 0.5
    dataset_seed: int = 7
    trial_seeds: tuple[int, ...] = (11, 12, 13)
    model: str = "hybrid"            # hybrid | lstm
    t_target_angle: float = math.pi / 2.0
    delta: float = 0.0
    optimizer: str = "sgd"           # hybrid optimizer; the baseline always uses Adam
    grad_method: str = "adjoint"     # adjoint | parameter-shift
    coupling: float = 1.0
    reflection_magnitude: float = 0.7
    reflection_phase: float = math.pi
    max_order: int = 2

    def __post_init__(self):
        self.trial_seeds = tuple(int(s) for s in self.trial_seeds)
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.m <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("m, batch_size and epochs must be positive")
        if len(self.trial_seeds) < 1:
            raise ValueError("need at least one trial seed")
        if len(set(self.trial_seeds)) != len(self.trial_seeds):
            raise ValueError("trial seeds must be distinct")
        if self.model not in ("hybrid", "lstm"):
            raise ValueError(f"unknown model {self.model!r}")

    @property
    def trials(self) -> int:
        return len(self.trial_seeds)

    def radio(self) -> RadioConfig:
        return RadioConfig(
            coupling=self.coupling,
            reflection_magnitude=self.reflection_magnitude,
            reflection_phase=self.reflection_phase,
            max_order=self.max_order,
        )

    def load_scene(self) -> Scene:
        if self.scene_path == "canonical":
            return load_canonical_scene()
        with open(self.scene_path, encoding="utf-8") as fh:
            return load_scene(fh.read())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trial_seeds"] = list(self.trial_seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class SampleRecord:
    m: int
    x: float
    y: float
    label: int
    split: str             # "train" | "test"
    paths: PathSet


@dataclass
class EpochMetrics:
    epoch: int
    train_loss_mean: float
    train_loss_accrued: float
    test_loss: float
    test_accuracy: float


# ---------------------------------------------------------------------------
# Dataset generation and IO
# ---------------------------------------------------------------------------

def generate_dataset(config: ExperimentConfig, scene: Scene | None = None) -> list[SampleRecord]:
    """Sample locations, trace their paths, assign labels and splits."""
    scene = scene or config.load_scene()
    region = scene.target(config.target)
    samples = sample_locations(
        scene, region, config.m,
        mode=config.sampling_mode,
        seed=config.dataset_seed,
        in_region_fraction=config.balanced_fraction,
    )
    radio = config.radio()
    n_train = int(round(config.train_fraction * config.m))
    perm = np.random.default_rng([config.dataset_seed, 1]).permutation(config.m)
    split = np.array(["test"] * config.m, dtype=object)
    split[perm[:n_train]] = "train"

    records = []
    for s in samples:
        ps = trace_paths(scene, (s.x, s.y), radio)
        records.append(SampleRecord(
            m=s.index, x=s.x, y=s.y, label=s.label,
            split=str(split[s.index]), paths=ps,
        ))
    return records


def write_dataset(records: list[SampleRecord], path: str) -> None:
    """One JSON object per line, paths sorted by ascending delay."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "m": r.m, "x": r.x, "y": r.y, "label": r.label,
                "split": r.split,
                "paths": [
                    {"k": p.tx, "n": p.order, "d_m": p.length, "tau_s": p.delay,
                     "a_re": p.gain.real, "a_im": p.gain.imag}
                    for p in r.paths
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def load_dataset(path: str) -> list[SampleRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            paths = tuple(
                Path(tx=p["k"], order=p["n"], length=p["d_m"], delay=p["tau_s"],
                     gain=complex(p["a_re"], p["a_im"]))
                for p in obj["paths"]
            )
            records.append(SampleRecord(
                m=obj["m"], x=obj["x"], y=obj["y"], label=obj["label"],
                split=obj.get("split", "train"),
                paths=PathSet(rx=(obj["x"], obj["y"]), paths=paths),
            ))
    return records


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------

def _split(records: list[SampleRecord]):
    train = [r for r in records if r.split == "train"]
    test = [r for r in records if r.split == "test"]
    return train, test


def _check_finite(loss: float, epoch: int, batch: int) -> None:
    if not math.isfinite(loss):
        raise RuntimeError(
            f"training diverged: non-finite loss at epoch {epoch}, batch {batch}")


def _eval_hybrid(lam, head, fis, labels):
    probe = md.prepare_probe(lam)
    total, correct = 0.0, 0
    for fi, r in zip(fis, labels):
        state = probe
        u = interaction_unitary(fi)
        for q in range(md.NUM_QUBITS):
            state = qsim._apply_1q(state, u, q)
        logits = md.head_forward(head, qsim.expectation_all_z(state))
        total += md.cross_entropy(logits, r)
        correct += int(np.argmax(logits) == r)
    n = len(labels)
    return total / n, correct / n


def train_hybrid(config: ExperimentConfig, records: list[SampleRecord],
                 omega: float, trial_seed: int):
    """One trial of joint probe + head training. Returns (checkpoint, metrics).

    The interaction time is calibrated on the training split before the
    first epoch and reused verbatim at test time.
    """
    train, test = _split(records)
    xis_train = [superpose(r.paths, omega) for r in train]
    t_int = calibrate_time([abs(x) for x in xis_train], config.t_target_angle)
    fis_train = [interaction_params(x, t_int, config.delta) for x in xis_train]
    fis_test = [interaction_params(superpose(r.paths, omega), t_int, config.delta)
                for r in test]
    y_train = [r.label for r in train]
    y_test = [r.label for r in test]

    rng = np.random.default_rng(trial_seed)
    lam = md.init_ansatz_params(rng)
    head = md.init_head_params(rng)
    opt_lam = make_optimizer(config.optimizer, config.lr_hybrid)
    opt_head = make_optimizer(config.optimizer, config.lr_hybrid)

    rows: list[EpochMetrics] = []
    accrued = 0.0
    n_train = len(train)
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, n_train, config.batch_size)):
            idx = order[start:start + config.batch_size]
            batch = [(fis_train[i], y_train[i]) for i in idx]
            loss, g_lam, g_head = md.hybrid_grad(
                lam, head, batch, training=True, rng=rng,
                method=config.grad_method)
            _check_finite(loss, epoch, bi)
            opt_lam.step(lam, g_lam)
            opt_head.step(head.theta, g_head)
            epoch_loss += loss * len(batch)
        epoch_loss /= n_train
        accrued += epoch_loss
        test_loss, test_acc = _eval_hybrid(lam, head, fis_test, y_test)
        rows.append(EpochMetrics(epoch, epoch_loss, accrued, test_loss, test_acc))

    checkpoint = {
        "model": "hybrid",
        "lambda": [float(v) for v in lam],
        "gamma": [float(v) for v in head.theta],
        "t_int": t_int,
        "delta": config.delta,
        "omega_rad_s": omega,
        "seed": trial_seed,
        "config_sha256": config.config_hash(),
    }
    return checkpoint, rows


def _eval_lstm(params, seqs, labels):
    total, correct = 0.0, 0
    for seq, r in zip(seqs, labels):
        logits = bl.lstm_forward(params, seq)
        total += md.cross_entropy(logits, r)
        correct += int(np.argmax(logits) == r)
    n = len(labels)
    return total / n, correct / n


def train_baseline(config: ExperimentConfig, records: list[SampleRecord],
                   omega: float, trial_seed: int):
    """One trial of the LSTM benchmark on the same dataset records."""
    train, test = _split(records)
    seq_train = [bl.phase_sequence(r.paths, omega) for r in train]
    seq_test = [bl.phase_sequence(r.paths, omega) for r in test]
    y_train = [r.label for r in train]
    y_test = [r.label for r in test]

    rng = np.random.default_rng(trial_seed)
    params = bl.init_lstm_params(rng)
    opt = Adam(config.lr_baseline)

    rows: list[EpochMetrics] = []
    accrued = 0.0
    n_train = len(train)
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, n_train, config.batch_size)):
            idx = order[start:start + config.batch_size]
            grad = np.zeros_like(params.theta)
            batch_loss = 0.0
            for i in idx:
                loss_i, g_i = bl.lstm_loss_grad(params, seq_train[i], y_train[i])
                batch_loss += loss_i
                grad += g_i
            batch_loss /= len(idx)
            _check_finite(batch_loss, epoch, bi)
            opt.step(params.theta, grad / len(idx))
            epoch_loss += batch_loss * len(idx)
        epoch_loss /= n_train
        accrued += epoch_loss
        test_loss, test_acc = _eval_lstm(params, seq_test, y_test)
        rows.append(EpochMetrics(epoch, epoch_loss, accrued, test_loss, test_acc))

    checkpoint = {
        "model": "lstm",
        "theta": [float(v) for v in params.theta],
        "input_size": params.input_size,
        "hidden_size": params.hidden_size,
        "omega_rad_s": omega,
        "seed": trial_seed,
        "config_sha256": config.config_hash(),
        "parameter_count": bl.count_parameters(params),
    }
    return checkpoint, rows


# ---------------------------------------------------------------------------
# Trials, metrics, evaluation
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_metrics_csv(per_trial: list[list[EpochMetrics]], path: str) -> None:
    """Per-epoch rows for every trial plus mean and variance rows."""
    epochs = len(per_trial[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for e in range(epochs):
            rows = [t[e] for t in per_trial]
            for ti, r in enumerate(rows):
                fh.write(",".join([str(e), str(ti), _fmt(r.train_loss_mean),
                                   _fmt(r.train_loss_accrued), _fmt(r.test_loss),
                                   _fmt(r.test_accuracy)]) + "\n")
            for agg_name, agg in (("mean", np.mean), ("var", np.var)):
                vals = [
                    agg([r.train_loss_mean for r in rows]),
                    agg([r.train_loss_accrued for r in rows]),
                    agg([r.test_loss for r in rows]),
                    agg([r.test_accuracy for r in rows]),
                ]
                fh.write(",".join([str(e), agg_name] + [_fmt(float(v)) for v in vals]) + "\n")


def run_trials(config: ExperimentConfig, out_dir: str) -> dict:
    """Generate the dataset once and train one model per trial seed.

    Writes dataset.jsonl, checkpoint_trial<i>.json, metrics.csv and the
    resolved config into `out_dir`; returns the artifact paths and the
    per-trial metric curves.
    """
    os.makedirs(out_dir, exist_ok=True)
    scene = config.load_scene()
    omega = 2.0 * math.pi * scene.carrier_frequency

    records = generate_dataset(config, scene)
    dataset_path = os.path.join(out_dir, "dataset.jsonl")
    write_dataset(records, dataset_path)
    dataset_hash = file_sha256(dataset_path)

    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    train_fn = train_hybrid if config.model == "hybrid" else train_baseline
    per_trial = []
    checkpoint_paths = []
    for ti, seed in enumerate(config.trial_seeds):
        checkpoint, rows = train_fn(config, records, omega, seed)
        checkpoint["dataset_sha256"] = dataset_hash
        cp_path = os.path.join(out_dir, f"checkpoint_trial{ti}.json")
        with open(cp_path, "w", encoding="utf-8") as fh:
            json.dump(checkpoint, fh)
            fh.write("\n")
        checkpoint_paths.append(cp_path)
        per_trial.append(rows)

    metrics_path = os.path.join(out_dir, "metrics.csv")
    write_metrics_csv(per_trial, metrics_path)
    return {
        "dataset": dataset_path,
        "metrics": metrics_path,
        "checkpoints": checkpoint_paths,
        "per_trial": per_trial,
    }


def evaluate(checkpoint_path: str, dataset_path: str) -> dict:
    """Test-split loss and accuracy for a stored checkpoint.

    Refuses to run when the dataset file does not match the provenance hash
    recorded at training time.
    """
    with open(checkpoint_path, encoding="utf-8") as fh:
        cp = json.load(fh)
    actual = file_sha256(dataset_path)
    expected = cp.get("dataset_sha256")
    if expected != actual:
        raise ValueError(
            f"dataset provenance mismatch: checkpoint was trained on "
            f"{expected}, got {actual}")
    records = load_dataset(dataset_path)
    _, test = _split(records)
    labels = [r.label for r in test]
    omega = cp["omega_rad_s"]
    if cp["model"] == "hybrid":
        lam = np.array(cp["lambda"])
        head = md.HeadParams(theta=np.array(cp["gamma"]))
        fis = [interaction_params(superpose(r.paths, omega), cp["t_int"], cp["delta"])
               for r in test]
        loss, acc = _eval_hybrid(lam, head, fis, labels)
    elif cp["model"] == "lstm":
        params = bl.LstmParams(theta=np.array(cp["theta"]),
                               input_size=cp["input_size"],
                               hidden_size=cp["hidden_size"])
        seqs = [bl.phase_sequence(r.paths, omega) for r in test]
        loss, acc = _eval_lstm(params, seqs, labels)
    else:
        raise ValueError(f"unknown checkpoint model {cp['model']!r}")
    return {"model": cp["model"], "test_loss": loss, "test_accuracy": acc,
            "n_test": len(labels)}
