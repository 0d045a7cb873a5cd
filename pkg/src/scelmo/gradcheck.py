"""Central finite-difference gradient checking.

The numerical side only ever calls the loss closure, so it stays independent
of any handwritten backward pass it is used to verify. Agreement is measured
per parameter tensor as ||analytic - numeric||_2 / max(||analytic||_2,
||numeric||_2, floor); the report carries the worst tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

_FLOOR = 1e-10


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    tol: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def _coords(shape, max_coords, rng):
    total = int(np.prod(shape)) if shape else 1
    if max_coords is None or total <= max_coords:
        return np.arange(total)
    return np.sort(rng.choice(total, size=max_coords, replace=False))


def grad_check(loss_fn, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
               eps: float = 1e-5, tol: float = 1e-4,
               max_coords: int | None = None, seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients against central differences of ``loss_fn``.

    ``loss_fn`` must be pure given the current parameter values; it is called
    with no arguments and reads the (perturbed) arrays in ``params`` in place.
    ``max_coords`` caps the checked coordinates per tensor (seeded sample).
    """
    rng = np.random.default_rng(seed)
    per_param: dict[str, float] = {}
    for name, p in params.items():
        g = grads[name]
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g, dtype=np.float64).reshape(-1)
        idx = _coords(p.shape, max_coords, rng)
        numeric = np.zeros(len(idx))
        for j, i in enumerate(idx):
            orig = flat_p[i]
            flat_p[i] = orig + eps
            f_plus = loss_fn()
            flat_p[i] = orig - eps
            f_minus = loss_fn()
            flat_p[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise TrainingError(f"non-finite loss while checking {name}")
            numeric[j] = (f_plus - f_minus) / (2.0 * eps)
        analytic = flat_g[idx]
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), _FLOOR)
        per_param[name] = float(np.linalg.norm(analytic - numeric) / denom)
    worst = max(per_param, key=per_param.get)
    return GradCheckReport(max_rel_error=per_param[worst], worst_param=worst,
                           tol=tol, per_param=per_param)
