"""Central-difference verification of the analytic gradients.

``loss_fn(model, inputs)`` must return (loss, grads) where grads maps
parameter names to arrays shaped like the parameters.  A seeded sample
of entries per tensor is perturbed by +/-eps and the relative error

    |analytic - central_difference| / max(|analytic|, |cd|, 1e-12)

is maximized over the sample.  Parameters absent from grads are treated
as all-zero gradients (a detached head reports 0, not an error).
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidConfig, NonFiniteGradient


def gradient_check(model, loss_fn, inputs, eps=1e-5, samples_per_tensor=4, seed=0,
                   atol=1e-9):
    """Max relative error between analytic and numeric gradients.

    Entries where both |analytic| and |cd| fall below ``atol`` are
    excluded from the max: a central difference cannot resolve anything
    under its own roundoff/truncation noise, so a relative comparison
    there is meaningless (a zero gradient still participates through the
    cd side whenever the perturbation actually moves the loss).

    Raises NonFiniteGradient when the loss or any analytic gradient is
    NaN/Inf.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise InvalidConfig(f"eps must be in [1e-6, 1e-3], got {eps}")
    loss0, grads = loss_fn(model, inputs)
    if not np.isfinite(loss0):
        raise NonFiniteGradient(f"loss is not finite: {loss0}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"gradient for '{name}' is not finite")

    rng = np.random.default_rng(seed)
    max_rel = 0.0
    for name in sorted(model.params):
        param = model.params[name]
        analytic = np.asarray(grads.get(name, np.zeros_like(param)))
        size = param.size
        k = min(samples_per_tensor, size)
        flat_idx = rng.choice(size, size=k, replace=False)
        flat_param = param.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for fi in flat_idx:
            original = flat_param[fi]
            flat_param[fi] = original + eps
            loss_plus, _ = loss_fn(model, inputs)
            flat_param[fi] = original - eps
            loss_minus, _ = loss_fn(model, inputs)
            flat_param[fi] = original
            cd = (loss_plus - loss_minus) / (2.0 * eps)
            a = float(flat_grad[fi])
            if max(abs(a), abs(cd)) < atol:
                continue
            rel = abs(a - cd) / max(abs(a), abs(cd), 1e-12)
            max_rel = max(max_rel, rel)
    return max_rel
