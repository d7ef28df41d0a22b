"""Inner-clipped Wasserstein gradient proxy and penalized objective gradients.

The parameter-space gradient of W2^2 between two model output distributions
decomposes into per-sample terms: coupling-weighted output differences times
per-sample parameter gradients.  Clipping the *outputs* to a norm ball and
the *per-sample Jacobians* to a norm bound before assembling the sum yields
a proxy whose sensitivity to any single record is controlled, which is what
lets Gaussian noise privatize it cheaply.

Clipped norms: with output bound B and Jacobian bounds J1 (x-side) and J2
(z-side), the assembled proxy always satisfies ||grad||_2 <= 4*B*(J1 + J2).

In the multidimensional case the Jacobian rows are clipped to bound/sqrt(d)
individually (which caps the spectral norm at ``bound``) rather than through
an SVD; this is the scheme actually used in training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Model
from .ot_core import w2_grad_columns, w2_squared_columns
from .sliced import ProjectionSet

__all__ = [
    "ClipConfig",
    "PenaltyConfig",
    "clip_vector",
    "clip_rows",
    "clip_jacobian_naive",
    "clipped_wasserstein_grad",
    "clipped_wasserstein_value",
    "clipped_erm_grad",
    "sp_objective_grad",
    "eo_objective_grad",
]


@dataclass(frozen=True)
class ClipConfig:
    """Clipping bounds: model outputs, per-sample Jacobians, loss gradients.

    ``output_bound`` caps the norm of model outputs entering the coupling;
    ``jac_bound1``/``jac_bound2`` cap per-sample Jacobians of the x-side and
    z-side maps; ``loss_grad_bound`` caps per-sample loss gradients in the
    finite-sum term.
    """

    output_bound: float
    jac_bound1: float
    jac_bound2: float
    loss_grad_bound: float = 0.0

    def __post_init__(self):
        for name in ("output_bound", "jac_bound1", "jac_bound2",
                     "loss_grad_bound"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def symmetric(cls, output_bound: float, jac_bound: float,
                  loss_grad_bound: float = 0.0) -> "ClipConfig":
        """Both maps share one Jacobian bound (the fairness-training case)."""
        return cls(output_bound, jac_bound, jac_bound, loss_grad_bound)


@dataclass(frozen=True)
class PenaltyConfig:
    """Fairness penalty: weight, flavor, and sliced-estimator size."""

    alpha: float
    mode: str  # "sp" or "eo"
    num_label_classes: int = 2
    num_projections: int = 50

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.mode not in ("sp", "eo"):
            raise ValueError(f"mode must be 'sp' or 'eo', got {self.mode!r}")
        if self.mode == "eo" and self.num_label_classes < 2:
            raise ValueError("eo mode needs at least 2 label classes")


def clip_vector(v, bound: float) -> np.ndarray:
    """Project ``v`` onto the L2 ball of radius ``bound``.

    Vectors inside the ball (and the zero vector) are returned unchanged;
    for scalars this is clamping to [-bound, bound].
    """
    if bound < 0:
        raise ValueError("bound must be >= 0")
    arr = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm <= bound or norm == 0.0:
        return arr.copy()
    return arr * (bound / norm)


def clip_rows(mat: np.ndarray, bound: float) -> np.ndarray:
    """Clip every row of a 2D array to L2 norm ``bound`` (vectorized)."""
    norms = np.linalg.norm(mat, axis=-1, keepdims=True)
    scale = np.minimum(1.0, np.divide(
        bound, norms, out=np.ones_like(norms), where=norms > 0))
    return mat * scale


def clip_jacobian_naive(jac: np.ndarray, bound: float) -> np.ndarray:
    """Row-wise Jacobian clipping: each of the d rows to bound/sqrt(d).

    Guarantees spectral norm <= ``bound`` without a matrix decomposition.
    Accepts a single (d, p) Jacobian or a batch (n, d, p); for d = 1 this is
    plain vector clipping.
    """
    if bound < 0:
        raise ValueError("bound must be >= 0")
    jac = np.asarray(jac, dtype=np.float64)
    d = jac.shape[-2]
    return clip_rows(jac, bound / np.sqrt(d))


def _resolve_param_space(g: Model, h: Model) -> int:
    if g is h or g.n_params == 0 or h.n_params == 0:
        return max(g.n_params, h.n_params)
    raise ValueError(
        "the two maps must share their parameter vector (same object) "
        "or one of them must be parameter-free")


def _clipped_outputs(g: Model, h: Model, x, z, output_bound: float,
                     dirs: ProjectionSet | None):
    u_raw = g.penalty_forward_batch(x)
    v_raw = h.penalty_forward_batch(z)
    if u_raw.shape[1] != v_raw.shape[1]:
        raise ValueError("the two maps must produce outputs of equal dimension")
    d = u_raw.shape[1]
    if dirs is None:
        if d != 1:
            raise ValueError(
                "a ProjectionSet is required for multidimensional outputs")
        u = np.clip(u_raw, -output_bound, output_bound)
        v = np.clip(v_raw, -output_bound, output_bound)
        return u, v
    if d != dirs.dim:
        raise ValueError(f"outputs are {d}-dimensional but directions are "
                         f"{dirs.dim}-dimensional")
    return (clip_rows(u_raw, output_bound) @ dirs.directions.T,
            clip_rows(v_raw, output_bound) @ dirs.directions.T)


def clipped_wasserstein_grad(g: Model, h: Model, x, z, clip: ClipConfig,
                             dirs: ProjectionSet | None = None) -> np.ndarray:
    """Clipped parameter-space gradient proxy for (sliced) W2^2.

    Outputs are clipped to the ball of radius ``clip.output_bound`` before
    the coupling is built; per-sample Jacobians are clipped to
    ``clip.jac_bound1`` / ``clip.jac_bound2`` (row-wise in the sliced case)
    before being weighted in.  With ``dirs`` given, the result is the average
    of the per-direction 1D assemblies over the projected outputs.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if x.shape[0] == 0 or z.shape[0] == 0:
        raise ValueError("both sample slices must be non-empty")
    n_params = _resolve_param_space(g, h)
    u, v = _clipped_outputs(g, h, x, z, clip.output_bound, dirs)
    gu, gv = w2_grad_columns(u, v)

    total = np.zeros(n_params)
    if dirs is None:
        if g.n_params:
            jg = clip_rows(g.penalty_jacobian_batch(x)[:, 0, :],
                           clip.jac_bound1)
            total += gu[:, 0] @ jg
        if h.n_params:
            jh = clip_rows(h.penalty_jacobian_batch(z)[:, 0, :],
                           clip.jac_bound2)
            total += gv[:, 0] @ jh
        return total

    k = dirs.k
    if g.n_params:
        jg = clip_jacobian_naive(g.penalty_jacobian_batch(x), clip.jac_bound1)
        coeff = (gu @ dirs.directions) / k          # (n, d)
        total += np.einsum("nd,ndp->p", coeff, jg)
    if h.n_params:
        jh = clip_jacobian_naive(h.penalty_jacobian_batch(z), clip.jac_bound2)
        coeff = (gv @ dirs.directions) / k
        total += np.einsum("nd,ndp->p", coeff, jh)
    return total


def clipped_wasserstein_value(g: Model, h: Model, x, z, output_bound: float,
                              dirs: ProjectionSet | None = None) -> float:
    """(Sliced) W2^2 between the clipped output distributions.

    This is the penalty value actually optimized by the clipped gradient, so
    it is what training loops report.
    """
    u, v = _clipped_outputs(g, h, np.atleast_2d(x), np.atleast_2d(z),
                            output_bound, dirs)
    return float(np.mean(w2_squared_columns(u, v)))


def clipped_erm_grad(model: Model, x, targets, loss_kind: str,
                     bound: float) -> np.ndarray:
    """Mean of per-sample loss gradients, each clipped to norm ``bound``."""
    grads = model.loss_grad_batch(x, targets, loss_kind)
    return clip_rows(grads, bound).mean(axis=0)


def sp_objective_grad(model: Model, x0, x1, x_full, y_full, clip: ClipConfig,
                      pen: PenaltyConfig, *, loss_kind: str,
                      dirs: ProjectionSet | None = None) -> np.ndarray:
    """Gradient of the statistical-parity penalized objective.

    ``(1 - alpha) * clipped ERM gradient over the full batch
    + alpha * clipped Wasserstein gradient`` between the class-conditional
    output distributions of ``x0`` and ``x1`` (the same model on both sides).
    """
    if pen.mode != "sp":
        raise ValueError("penalty mode must be 'sp'")
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    if x0.shape[0] == 0 or x1.shape[0] == 0:
        raise ValueError("both class batches must be non-empty")
    alpha = pen.alpha
    total = np.zeros(model.n_params)
    if alpha < 1.0:
        total += (1.0 - alpha) * clipped_erm_grad(
            model, x_full, y_full, loss_kind, clip.loss_grad_bound)
    if alpha > 0.0:
        total += alpha * clipped_wasserstein_grad(
            model, model, x0, x1, clip, dirs)
    return total


def eo_objective_grad(model: Model, batches, x_full, y_full,
                      clip: ClipConfig, pen: PenaltyConfig, *,
                      loss_kind: str,
                      dirs: ProjectionSet | None = None) -> np.ndarray:
    """Gradient of the equality-of-odds penalized objective.

    ``batches`` maps (sensitive class j, label k) to that group's inputs;
    the penalty averages, over the label classes, the clipped Wasserstein
    gradient between the (j=0, k) and (j=1, k) output distributions.
    """
    if pen.mode != "eo":
        raise ValueError("penalty mode must be 'eo'")
    r = pen.num_label_classes
    groups = {}
    for j in (0, 1):
        for k in range(r):
            if (j, k) not in batches:
                raise ValueError(f"missing batch for class ({j}, {k})")
            b = np.atleast_2d(np.asarray(batches[(j, k)], dtype=np.float64))
            if b.shape[0] == 0:
                raise ValueError(f"class batch ({j}, {k}) is empty")
            groups[(j, k)] = b
    alpha = pen.alpha
    total = np.zeros(model.n_params)
    if alpha < 1.0:
        total += (1.0 - alpha) * clipped_erm_grad(
            model, x_full, y_full, loss_kind, clip.loss_grad_bound)
    if alpha > 0.0:
        acc = np.zeros(model.n_params)
        for k in range(r):
            acc += clipped_wasserstein_grad(
                model, model, groups[(0, k)], groups[(1, k)], clip, dirs)
        total += (alpha / r) * acc
    return total
