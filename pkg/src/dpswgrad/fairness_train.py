"""DP-SGD training with fairness penalties, budget tracking, and metrics.

Each step draws a fixed-size without-replacement batch per class, assembles
the clipped penalized gradient, adds Gaussian noise calibrated once per run
from the closed-form sensitivity at the realized batch sizes, and takes a
plain SGD step.  The only randomness beyond subsampling is the per-step
noise, so a run with noise scale zero is a deterministic clipped-SGD
trajectory and any run is bit-reproducible from its seed.

Reported losses are the quantities actually optimized: the finite-sum term
is the plain per-sample loss mean, the penalty term is the (sliced) W2^2 of
the *clipped* output distributions, both evaluated noiselessly on the
current batch before the update.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import privacy, sensitivity
from .data import BiasedDataset, ClassPartition, centered_targets, partition
from .dp_gradient import (ClipConfig, PenaltyConfig, clipped_wasserstein_grad,
                          clipped_wasserstein_value, eo_objective_grad,
                          sp_objective_grad)
from .models import AffineSigmoidModel, IdentityModel, make_model
from .sliced import ProjectionSet, sample_directions

__all__ = ["TASKS", "TrainConfig", "TrainRecord", "subsample_partitioned",
           "dpsgd_train", "metrics"]

TASKS = ("classification_sp", "classification_eo", "regression_sp",
         "autoencoder_sp", "generation")

# substream tags; model init uses [seed, 0..3] internally, so start high
_TAG_BATCH, _TAG_NOISE, _TAG_DIRS, _TAG_GEN = 101, 102, 103, 104

_TASK_MODEL_KINDS = {
    "classification_sp": ("affine_sigmoid",),
    "classification_eo": ("affine_sigmoid",),
    "regression_sp": ("mlp2", "affine"),
    "autoencoder_sp": ("autoencoder",),
    "generation": ("mlp2", "affine"),
}


def _substream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), *map(int, tags)])))


@dataclass(frozen=True)
class TrainConfig:
    task: str
    steps: int
    learning_rate: float
    epsilon: float           # may be math.inf for a non-private run
    delta: float
    alpha: float
    clip: ClipConfig
    batch_fraction: float = 0.2
    num_projections: int = 50
    seed: int = 0
    model_kind: str | None = None   # None = task default
    hidden_dim: int | None = None
    latent_dim: int = 2
    resample_directions: bool = False
    gen_samples: int = 2000      # generation task only
    gen_radius: float = 0.75

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0 (math.inf for non-private)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch fraction must lie in (0, 1]")
        if self.num_projections < 1:
            raise ValueError("num_projections must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.task != "generation" \
                and self.clip.jac_bound1 != self.clip.jac_bound2:
            raise ValueError(
                "fairness tasks share one Jacobian bound for both sides")
        allowed = _TASK_MODEL_KINDS[self.task]
        if self.model_kind is not None and self.model_kind not in allowed:
            raise ValueError(f"task {self.task!r} supports model kinds "
                             f"{allowed}, got {self.model_kind!r}")


@dataclass
class TrainRecord:
    task: str
    seed: int
    steps: int
    non_private: bool
    epsilon_target: float
    delta: float
    sensitivity: float
    sampling_rate: float
    sigma: float
    noise_multiplier: float | None
    epsilon_spent: float
    accountant_formula: str
    class_sizes: dict
    batch_sizes: dict
    model_meta: dict
    final_theta: np.ndarray
    erm_losses: list = field(default_factory=list)
    w_losses: list = field(default_factory=list)
    total_losses: list = field(default_factory=list)
    epsilon_history: list = field(default_factory=list)
    metrics: dict | None = None
    config: dict | None = None

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return None
            if isinstance(v, float) and math.isnan(v):
                return None
            return v

        return {
            "task": self.task,
            "seed": self.seed,
            "steps": self.steps,
            "non_private": self.non_private,
            "epsilon_target": enc(self.epsilon_target),
            "delta": self.delta,
            "sensitivity": self.sensitivity,
            "sampling_rate": self.sampling_rate,
            "sigma": self.sigma,
            "noise_multiplier": self.noise_multiplier,
            "epsilon_spent": enc(self.epsilon_spent),
            "accountant_formula": self.accountant_formula,
            "class_sizes": {str(k): int(v)
                            for k, v in self.class_sizes.items()},
            "batch_sizes": {str(k): int(v)
                            for k, v in self.batch_sizes.items()},
            "model_meta": self.model_meta,
            "final_theta": [float(t) for t in self.final_theta],
            "erm_losses": [float(v) for v in self.erm_losses],
            "w_losses": [float(v) for v in self.w_losses],
            "total_losses": [float(v) for v in self.total_losses],
            "epsilon_history": [enc(float(v)) for v in self.epsilon_history],
            "metrics": None if self.metrics is None else
                       {k: enc(float(v)) for k, v in self.metrics.items()},
            "config": self.config,
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def subsample_partitioned(part: ClassPartition, sizes: dict,
                          rng: np.random.Generator) -> dict:
    """Uniform without-replacement batch per class, independent across classes."""
    batches = {}
    for key, idx in part.indices.items():
        size = int(sizes[key])
        if size < 1 or size > idx.size:
            raise ValueError(
                f"batch size {size} invalid for class {key!r} of size {idx.size}")
        batches[key] = np.sort(rng.choice(idx, size=size, replace=False))
    return batches


def _batch_sizes(class_sizes: dict, fraction: float) -> dict:
    sizes = {}
    for key, n_k in class_sizes.items():
        size = int(math.floor(n_k * fraction))
        if size < 1:
            raise ValueError(
                f"class {key!r} (size {n_k}) yields an empty batch at "
                f"fraction {fraction}; enlarge the class or the fraction")
        sizes[key] = size
    return sizes


def _circle_sample(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def dpsgd_train(cfg: TrainConfig, ds: BiasedDataset | None,
                ds_test: BiasedDataset | None = None) -> TrainRecord:
    """Run the subsampled noisy-gradient loop and return the full record."""
    if cfg.task == "generation":
        return _train_generation(cfg)
    if ds is None:
        raise ValueError(f"task {cfg.task!r} requires a dataset")

    clip = cfg.clip
    jac_bound = clip.jac_bound1
    dim = ds.dim

    if cfg.task in ("classification_sp", "classification_eo"):
        model = make_model("affine_sigmoid", dim, seed=cfg.seed)
        loss_kind = "bce"
        targets = ds.y.astype(np.float64)
        penalty_dirs_dim = None
    elif cfg.task == "regression_sp":
        kind = cfg.model_kind or "mlp2"
        model = make_model(kind, dim, seed=cfg.seed,
                           hidden_dim=cfg.hidden_dim or 64, output_dim=2,
                           output_activation="sigmoid_recentered")
        loss_kind = "squared_error"
        targets = centered_targets(ds)
        penalty_dirs_dim = 2
    elif cfg.task == "autoencoder_sp":
        model = make_model("autoencoder", dim, seed=cfg.seed,
                           hidden_dim=cfg.hidden_dim or 62,
                           latent_dim=cfg.latent_dim)
        loss_kind = "squared_error"
        targets = ds.x
        penalty_dirs_dim = cfg.latent_dim
    else:  # pragma: no cover - guarded by TrainConfig
        raise ValueError(cfg.task)

    if cfg.task == "classification_eo":
        part = partition(ds, "by_a_and_y")
        pen = PenaltyConfig(alpha=cfg.alpha, mode="eo", num_label_classes=2,
                            num_projections=cfg.num_projections)
    else:
        part = partition(ds, "by_a")
        pen = PenaltyConfig(alpha=cfg.alpha, mode="sp",
                            num_projections=cfg.num_projections)
    empty = part.empty_classes()
    if empty:
        raise ValueError(f"dataset has empty classes: {empty}")

    class_sizes = part.sizes
    batch_sizes = _batch_sizes(class_sizes, cfg.batch_fraction)
    n_batch = sum(batch_sizes.values())
    sampling_rate = max(batch_sizes[k] / class_sizes[k] for k in class_sizes)

    if cfg.task == "classification_eo":
        delta2 = sensitivity.bound_eo(
            clip.loss_grad_bound, clip.output_bound, jac_bound, n_batch,
            [batch_sizes[k] for k in part.keys], cfg.alpha,
            num_label_classes=2)
    else:
        delta2 = sensitivity.bound_sp(
            clip.loss_grad_bound, clip.output_bound, jac_bound, n_batch,
            batch_sizes[0], batch_sizes[1], cfg.alpha)

    non_private = math.isinf(cfg.epsilon)
    if non_private:
        sigma, nu, accountant = 0.0, None, None
    else:
        sigma = privacy.calibrate_noise(
            privacy.PrivacyBudget(cfg.epsilon, cfg.delta), cfg.steps,
            sampling_rate, delta2)
        nu = sigma / delta2
        accountant = privacy.AccountantState(
            noise_multiplier=nu, sampling_rate=sampling_rate,
            target_delta=cfg.delta)

    dirs = None
    if penalty_dirs_dim is not None and not cfg.resample_directions:
        dirs = _draw_directions(cfg, penalty_dirs_dim)

    record = TrainRecord(
        task=cfg.task, seed=cfg.seed, steps=cfg.steps,
        non_private=non_private, epsilon_target=cfg.epsilon, delta=cfg.delta,
        sensitivity=delta2, sampling_rate=sampling_rate, sigma=sigma,
        noise_multiplier=nu,
        epsilon_spent=math.inf if non_private else 0.0,
        accountant_formula=privacy.ACCOUNTANT_FORMULA,
        class_sizes=class_sizes, batch_sizes=batch_sizes,
        model_meta=_model_meta(model),
        final_theta=model.theta, config=_config_dict(cfg))

    for t in range(cfg.steps):
        if penalty_dirs_dim is not None and cfg.resample_directions:
            dirs = _draw_directions(cfg, penalty_dirs_dim, step=t)
        rng_batch = _substream(cfg.seed, _TAG_BATCH, t)
        batch = subsample_partitioned(part, batch_sizes, rng_batch)

        if cfg.task == "classification_eo":
            groups = {key: ds.x[idx] for key, idx in batch.items()}
            union = np.concatenate([batch[k] for k in part.keys])
            x_full, y_full = ds.x[union], targets[union]
            grad = eo_objective_grad(model, groups, x_full, y_full, clip, pen,
                                     loss_kind=loss_kind, dirs=dirs)
            w_val = 0.5 * sum(
                clipped_wasserstein_value(model, model, groups[(0, k)],
                                          groups[(1, k)], clip.output_bound,
                                          dirs)
                for k in (0, 1))
        else:
            x0, x1 = ds.x[batch[0]], ds.x[batch[1]]
            union = np.concatenate([batch[0], batch[1]])
            x_full, y_full = ds.x[union], targets[union]
            grad = sp_objective_grad(model, x0, x1, x_full, y_full, clip, pen,
                                     loss_kind=loss_kind, dirs=dirs)
            w_val = clipped_wasserstein_value(model, model, x0, x1,
                                              clip.output_bound, dirs)

        erm_val = float(np.mean(model.loss_batch(x_full, y_full, loss_kind)))
        total = (1.0 - cfg.alpha) * erm_val + cfg.alpha * w_val
        record.erm_losses.append(erm_val)
        record.w_losses.append(w_val)
        record.total_losses.append(total)

        if sigma > 0.0:
            grad = privacy.gaussian_mechanism(
                grad, sigma, _substream(cfg.seed, _TAG_NOISE, t))
        model.theta -= cfg.learning_rate * grad

        if accountant is not None:
            accountant.step()
            record.epsilon_history.append(accountant.epsilon_spent())
        else:
            record.epsilon_history.append(math.inf)

    record.final_theta = model.theta.copy()
    record.epsilon_spent = (math.inf if accountant is None
                            else accountant.epsilon_spent())
    if ds_test is not None:
        record.metrics = metrics(ds_test, model, cfg.task)
    return record


def _train_generation(cfg: TrainConfig) -> TrainRecord:
    """Smoke-scale demo: push Gaussian samples onto a circle privately.

    Both the trained inputs and the reference samples are treated as
    private, so the two-sided sensitivity bound calibrates the noise (the
    reference side is parameter-free, so its Jacobian bound is zero).
    """
    rng_data = _substream(cfg.seed, _TAG_GEN)
    n = cfg.gen_samples
    x = rng_data.standard_normal((n, 2))
    z = _circle_sample(rng_data, n, cfg.gen_radius)

    model = make_model(cfg.model_kind or "mlp2", 2, seed=cfg.seed,
                       hidden_dim=cfg.hidden_dim or 32, output_dim=2,
                       output_activation="linear")
    reference = IdentityModel(2)
    clip = cfg.clip

    n_batch = max(1, int(math.floor(n * cfg.batch_fraction)))
    sampling_rate = n_batch / n
    delta2 = sensitivity.bound_two_sided(
        clip.output_bound, clip.jac_bound1, 0.0, n_batch, n_batch)

    non_private = math.isinf(cfg.epsilon)
    if non_private:
        sigma, nu, accountant = 0.0, None, None
    else:
        sigma = privacy.calibrate_noise(
            privacy.PrivacyBudget(cfg.epsilon, cfg.delta), cfg.steps,
            sampling_rate, delta2)
        nu = sigma / delta2
        accountant = privacy.AccountantState(
            noise_multiplier=nu, sampling_rate=sampling_rate,
            target_delta=cfg.delta)

    dirs = (None if cfg.resample_directions
            else _draw_directions(cfg, 2))
    record = TrainRecord(
        task=cfg.task, seed=cfg.seed, steps=cfg.steps,
        non_private=non_private, epsilon_target=cfg.epsilon, delta=cfg.delta,
        sensitivity=delta2, sampling_rate=sampling_rate, sigma=sigma,
        noise_multiplier=nu,
        epsilon_spent=math.inf if non_private else 0.0,
        accountant_formula=privacy.ACCOUNTANT_FORMULA,
        class_sizes={"x": n, "z": n},
        batch_sizes={"x": n_batch, "z": n_batch},
        model_meta=_model_meta(model),
        final_theta=model.theta, config=_config_dict(cfg))

    for t in range(cfg.steps):
        if cfg.resample_directions:
            dirs = _draw_directions(cfg, 2, step=t)
        rng_batch = _substream(cfg.seed, _TAG_BATCH, t)
        bx = np.sort(rng_batch.choice(n, size=n_batch, replace=False))
        bz = np.sort(rng_batch.choice(n, size=n_batch, replace=False))
        grad = clipped_wasserstein_grad(model, reference, x[bx], z[bz],
                                        clip, dirs)
        w_val = clipped_wasserstein_value(model, reference, x[bx], z[bz],
                                          clip.output_bound, dirs)
        record.erm_losses.append(0.0)
        record.w_losses.append(w_val)
        record.total_losses.append(w_val)

        if sigma > 0.0:
            grad = privacy.gaussian_mechanism(
                grad, sigma, _substream(cfg.seed, _TAG_NOISE, t))
        model.theta -= cfg.learning_rate * grad
        if accountant is not None:
            accountant.step()
            record.epsilon_history.append(accountant.epsilon_spent())
        else:
            record.epsilon_history.append(math.inf)

    record.final_theta = model.theta.copy()
    record.epsilon_spent = (math.inf if accountant is None
                            else accountant.epsilon_spent())
    return record


def _model_meta(model) -> dict:
    """Shape metadata sufficient to rebuild the model from a flat theta."""
    meta = model.meta()
    if hasattr(model, "hidden_dim"):
        meta["hidden_dim"] = model.hidden_dim
        meta["hidden_activation"] = "sigmoid"
    if hasattr(model, "output_activation"):
        meta["output_activation"] = model.output_activation
    if hasattr(model, "latent_dim"):
        meta["latent_dim"] = model.latent_dim
    return meta


def _draw_directions(cfg: TrainConfig, dim: int,
                     step: int | None = None) -> ProjectionSet:
    tags = [cfg.seed, _TAG_DIRS] + ([] if step is None else [step])
    ss = np.random.SeedSequence(tags)
    return sample_directions(dim, cfg.num_projections,
                             int(ss.generate_state(1, np.uint64)[0]))


def _config_dict(cfg: TrainConfig) -> dict:
    doc = asdict(cfg)
    doc["epsilon"] = None if math.isinf(cfg.epsilon) else cfg.epsilon
    return doc


def _rate_ratio(positive: np.ndarray, mask0: np.ndarray,
                mask1: np.ndarray) -> float:
    """P(positive | mask0) / P(positive | mask1); NaN when undefined."""
    if not mask0.any() or not mask1.any():
        return float("nan")
    p0 = float(np.mean(positive[mask0]))
    p1 = float(np.mean(positive[mask1]))
    if p1 == 0.0:
        return float("nan")
    return p0 / p1


def metrics(ds_test: BiasedDataset, model, task: str) -> dict:
    """Task-specific evaluation table; undefined entries come back as NaN."""
    a = ds_test.a
    y = ds_test.y
    if task in ("classification_sp", "classification_eo"):
        q = model.forward_batch(ds_test.x)[:, 0]
        pred = (q > 0.5).astype(np.int64)
        out = {"accuracy": float(np.mean(pred == y)),
               "di": _rate_ratio(pred, a == 0, a == 1)}
        for k in (0, 1):
            out[f"eo_{k}"] = _rate_ratio(pred, (a == 0) & (y == k),
                                         (a == 1) & (y == k))
        return out
    if task == "regression_sp":
        pred = model.forward_batch(ds_test.x)
        resid = pred - centered_targets(ds_test)
        over = pred[:, 1] > -pred[:, 0]
        return {"mse": float(np.mean(np.sum(resid * resid, axis=1))),
                "od_0": (float(np.mean(over[a == 0]))
                         if (a == 0).any() else float("nan")),
                "od_1": (float(np.mean(over[a == 1]))
                         if (a == 1).any() else float("nan"))}
    if task == "autoencoder_sp":
        recon = model.forward_batch(ds_test.x)
        resid = recon - ds_test.x
        core = ds_test.config.core_dim
        codes = model.encode_batch(ds_test.x)
        out = {"rl": float(np.mean(np.sum(resid * resid, axis=1))),
               "rl_core": float(np.mean(
                   np.sum(resid[:, :core] * resid[:, :core], axis=1)))}
        out.update(_probe_metrics(codes, y, a))
        return out
    raise ValueError(f"no metric table for task {task!r}")


def _probe_metrics(codes: np.ndarray, y: np.ndarray, a: np.ndarray,
                   train_frac: float = 0.6, gd_steps: int = 500,
                   gd_lr: float = 0.5) -> dict:
    """Downstream-probe metrics: a one-layer classifier fit on 60% of the
    encoded test data (zero-initialized full-batch descent, deterministic)
    and evaluated on the remaining 40%."""
    n = codes.shape[0]
    n_train = int(train_frac * n)
    if n_train < 1 or n_train >= n:
        return {"probe_accuracy": float("nan"), "probe_di": float("nan")}
    probe = AffineSigmoidModel(codes.shape[1],
                               theta=np.zeros(codes.shape[1] + 1))
    y_train = y[:n_train].astype(np.float64)
    for _ in range(gd_steps):
        g = probe.loss_grad_batch(codes[:n_train], y_train, "bce").mean(axis=0)
        probe.theta -= gd_lr * g
    q = probe.forward_batch(codes[n_train:])[:, 0]
    pred = (q > 0.5).astype(np.int64)
    return {"probe_accuracy": float(np.mean(pred == y[n_train:])),
            "probe_di": _rate_ratio(pred, a[n_train:] == 0,
                                    a[n_train:] == 1)}
