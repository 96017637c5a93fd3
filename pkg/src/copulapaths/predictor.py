"""Trainable predictor of Gaussian copula parameters from a context window.

Two small backbones (an MLP over the last 30 steps and a GRU over up to the
last 128 steps) map a max-scaled context to either ``rho`` or ``(rho, beta)``.
Outputs are squashed -- ``rho = 0.999 tanh(raw)``, ``beta = sigmoid(raw)`` --
so predictions always lie strictly inside the valid parameter domain.

Training minimizes the variogram score of paths generated with the
predicted parameters: the gradient with respect to the 1-2 copula
parameters is taken by central finite differences under common random
numbers (the reparameterization noise is fixed within a step), and is then
backpropagated analytically through the head and backbone.  Updates use
textbook Adam.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .copula import CopulaParams, cholesky_for, norm_cdf
from .errors import ContextTooShort, NonFiniteLoss
from .forecasters import ForecastRequest, forecast
from .iqf import DEFAULT_LEVELS, fit_iqf, quantile_matrix
from .scoring import variogram_score

RHO_SQUASH = 0.999
MLP_WINDOW = 30
GRU_WINDOW = 128


@dataclass(frozen=True, slots=True)
class NetworkSpec:
    backbone: str  # "mlp" or "gru"
    output_params: str = "rho"  # "rho" or "rho_beta"
    mlp_hidden: tuple = (64, 32)
    gru_hidden: int = 16
    head_hidden: int = 16

    def __post_init__(self):
        if self.backbone not in ("mlp", "gru"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.output_params not in ("rho", "rho_beta"):
            raise ValueError(f"unknown output_params {self.output_params!r}")

    @property
    def n_outputs(self) -> int:
        return 2 if self.output_params == "rho_beta" else 1


@dataclass(slots=True)
class TrainingConfig:
    epochs: int = 10
    paths_per_series: int = 20
    horizon: int = 8
    learning_rate: float = 0.001
    fd_step: float = 1e-4
    nonneg: bool = True
    levels: tuple = DEFAULT_LEVELS


def _glorot(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in = shape[-1] if len(shape) > 1 else 1
    fan_out = shape[0]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def expected_shapes(spec: NetworkSpec) -> dict:
    p = spec.n_outputs
    if spec.backbone == "mlp":
        h1, h2 = spec.mlp_hidden
        return {
            "mlp.w1": (h1, MLP_WINDOW), "mlp.b1": (h1,),
            "mlp.w2": (h2, h1), "mlp.b2": (h2,),
            "mlp.w_out": (p, h2), "mlp.b_out": (p,),
        }
    h = spec.gru_hidden
    g = spec.head_hidden
    return {
        "gru.w_z": (h,), "gru.u_z": (h, h), "gru.b_z": (h,),
        "gru.w_r": (h,), "gru.u_r": (h, h), "gru.b_r": (h,),
        "gru.w_n": (h,), "gru.u_n": (h, h), "gru.b_n": (h,),
        "head.w_hidden": (g, h), "head.b_hidden": (g,),
        "head.w_out": (p, g), "head.b_out": (p,),
    }


def init_weights(spec: NetworkSpec, seed: int) -> dict:
    """Glorot-uniform matrices, zero biases.

    With the ``rho_beta`` head the beta output bias starts at
    ``logit(0.1)`` so the diagonal mixture weight begins near 0.1.
    """
    rng = np.random.default_rng(seed)
    weights = {}
    for name, shape in expected_shapes(spec).items():
        if name.endswith((".b1", ".b2", ".b_out", ".b_hidden", ".b_z", ".b_r", ".b_n")):
            weights[name] = np.zeros(shape)
        else:
            weights[name] = _glorot(rng, shape)
    if spec.output_params == "rho_beta":
        key = "mlp.b_out" if spec.backbone == "mlp" else "head.b_out"
        weights[key][1] = math.log(0.1 / 0.9)
    return weights


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def input_window(spec: NetworkSpec, scaled_context) -> np.ndarray:
    ctx = np.asarray(scaled_context, dtype=float)
    if spec.backbone == "mlp":
        if ctx.size < MLP_WINDOW:
            raise ContextTooShort(
                f"MLP backbone needs {MLP_WINDOW} steps, got {ctx.size}"
            )
        return ctx[-MLP_WINDOW:]
    if ctx.size < 1:
        raise ContextTooShort("GRU backbone needs at least 1 step")
    return ctx[-GRU_WINDOW:]


def forward_raw(spec: NetworkSpec, weights: dict, window: np.ndarray):
    """Pre-squash network output and the cache needed for backprop."""
    if spec.backbone == "mlp":
        x = window
        a1 = weights["mlp.w1"] @ x + weights["mlp.b1"]
        h1 = np.tanh(a1)
        a2 = weights["mlp.w2"] @ h1 + weights["mlp.b2"]
        h2 = np.tanh(a2)
        raw = weights["mlp.w_out"] @ h2 + weights["mlp.b_out"]
        return raw, ("mlp", x, h1, h2)

    nh = spec.gru_hidden
    # one stacked recurrent matvec per step covers all three gates
    u_all = np.vstack([weights["gru.u_z"], weights["gru.u_r"], weights["gru.u_n"]])
    w_z, b_z = weights["gru.w_z"], weights["gru.b_z"]
    w_r, b_r = weights["gru.w_r"], weights["gru.b_r"]
    w_n, b_n = weights["gru.w_n"], weights["gru.b_n"]
    h = np.zeros(nh)
    steps = []
    for x_t in window:
        lin = u_all @ h
        z = _sigmoid(w_z * x_t + lin[:nh] + b_z)
        r = _sigmoid(w_r * x_t + lin[nh : 2 * nh] + b_r)
        uh = lin[2 * nh :]
        n = np.tanh(w_n * x_t + r * uh + b_n)
        h_new = (1.0 - z) * n + z * h
        steps.append((x_t, h, z, r, uh, n))
        h = h_new
    ag = weights["head.w_hidden"] @ h + weights["head.b_hidden"]
    g = np.tanh(ag)
    raw = weights["head.w_out"] @ g + weights["head.b_out"]
    return raw, ("gru", steps, h, g)


def backward_raw(spec: NetworkSpec, weights: dict, cache, d_raw: np.ndarray) -> dict:
    """Gradient of ``d_raw @ raw`` with respect to every weight."""
    grads = {name: np.zeros_like(w) for name, w in weights.items()}
    if cache[0] == "mlp":
        _, x, h1, h2 = cache
        grads["mlp.w_out"] = np.outer(d_raw, h2)
        grads["mlp.b_out"] = d_raw.copy()
        dh2 = weights["mlp.w_out"].T @ d_raw
        da2 = dh2 * (1.0 - h2 * h2)
        grads["mlp.w2"] = np.outer(da2, h1)
        grads["mlp.b2"] = da2
        dh1 = weights["mlp.w2"].T @ da2
        da1 = dh1 * (1.0 - h1 * h1)
        grads["mlp.w1"] = np.outer(da1, x)
        grads["mlp.b1"] = da1
        return grads

    _, steps, h_last, g = cache
    grads["head.w_out"] = np.outer(d_raw, g)
    grads["head.b_out"] = d_raw.copy()
    dg = weights["head.w_out"].T @ d_raw
    dag = dg * (1.0 - g * g)
    grads["head.w_hidden"] = np.outer(dag, h_last)
    grads["head.b_hidden"] = dag
    dh = weights["head.w_hidden"].T @ dag

    nh = dh.size
    n_steps = len(steps)
    ut_all = np.vstack(
        [weights["gru.u_z"], weights["gru.u_r"], weights["gru.u_n"]]
    ).T  # (nh, 3 nh): one matvec propagates all three gate deltas to h_prev
    da = np.empty((n_steps, 3 * nh))  # columns: [daz, dar, duh]
    dan_mat = np.empty((n_steps, nh))
    h_prev_mat = np.empty((n_steps, nh))
    xs = np.empty(n_steps)
    for t in range(n_steps - 1, -1, -1):
        x_t, h_prev, z, r, uh, n = steps[t]
        dan = dh * (1.0 - z) * (1.0 - n * n)
        row = da[t]
        row[:nh] = dh * (h_prev - n) * z * (1.0 - z)
        row[nh : 2 * nh] = dan * uh * r * (1.0 - r)
        row[2 * nh :] = dan * r  # gradient w.r.t. U_n h_prev
        dan_mat[t] = dan
        h_prev_mat[t] = h_prev
        xs[t] = x_t
        dh = dh * z + ut_all @ row
    daz = da[:, :nh]
    dar = da[:, nh : 2 * nh]
    duh = da[:, 2 * nh :]
    grads["gru.w_z"] = xs @ daz
    grads["gru.w_r"] = xs @ dar
    grads["gru.w_n"] = xs @ dan_mat
    grads["gru.b_z"] = daz.sum(axis=0)
    grads["gru.b_r"] = dar.sum(axis=0)
    grads["gru.b_n"] = dan_mat.sum(axis=0)
    grads["gru.u_z"] = daz.T @ h_prev_mat
    grads["gru.u_r"] = dar.T @ h_prev_mat
    grads["gru.u_n"] = duh.T @ h_prev_mat
    return grads


def squash(spec: NetworkSpec, raw: np.ndarray) -> tuple[float, float | None]:
    rho = RHO_SQUASH * math.tanh(float(raw[0]))
    beta = float(_sigmoid(raw[1])) if spec.output_params == "rho_beta" else None
    return rho, beta


def predict_params(
    spec: NetworkSpec, weights: dict, scaled_context, horizon: int
) -> CopulaParams:
    """Predicted copula parameters for a max-scaled context window."""
    window = input_window(spec, scaled_context)
    raw, _ = forward_raw(spec, weights, window)
    rho, beta = squash(spec, raw)
    return CopulaParams(rho=rho, horizon=horizon, beta=beta)


def adam_init(weights: dict) -> dict:
    return {
        "m": {k: np.zeros_like(v) for k, v in weights.items()},
        "v": {k: np.zeros_like(v) for k, v in weights.items()},
        "t": 0,
    }


def adam_step(
    weights: dict,
    grads: dict,
    state: dict,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> dict:
    """Textbook Adam with bias correction; updates weights and state in place."""
    state["t"] += 1
    t = state["t"]
    for name, g in grads.items():
        m = state["m"][name]
        v = state["v"][name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        weights[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


@dataclass(slots=True)
class TrainResult:
    weights: dict
    epoch_losses: list
    step_losses: list = field(default_factory=list)
    skipped_series: int = 0


def _copula_vs(dists, future, rho, beta, horizon, noise) -> float:
    params = CopulaParams(rho=rho, horizon=horizon, beta=beta)
    factor = cholesky_for(params)
    u = np.clip(norm_cdf(noise @ factor.lower.T), 1e-12, 1.0 - 1e-12)
    paths = quantile_matrix(dists, u)
    return variogram_score(paths, future)


def train(
    spec: NetworkSpec,
    weights: dict,
    dataset: list,
    config: TrainingConfig,
    seed: int,
    forecaster,
    trainable: set | None = None,
) -> TrainResult:
    """Minimize the variogram score of generated paths over a dataset.

    ``dataset`` holds (context, future) pairs with futures of length
    ``config.horizon``; ``forecaster`` is a handle or a callable mapping a
    context to a handle (for per-series reference marginals).  One series
    per step, shuffled each epoch; deterministic given ``seed``.
    ``trainable`` optionally restricts which weights are updated.
    """
    h = config.horizon
    rng = np.random.default_rng(seed)
    prepared = []
    skipped = 0
    for context, future in dataset:
        ctx = np.asarray(context, dtype=float)
        fut = np.asarray(future, dtype=float)
        if fut.size != h:
            raise ValueError(f"future must have length {h}, got {fut.size}")
        scale = float(ctx.max())
        if scale <= 0.0:
            skipped += 1
            continue
        handle = forecaster(ctx) if callable(forecaster) else forecaster
        fc = forecast(handle, ForecastRequest(ctx, horizon=h, levels=config.levels))
        dists = [fit_iqf(k, config.nonneg) for k in fc.per_horizon]
        window = input_window(spec, ctx / scale)
        prepared.append((window, fut, dists))
    if not prepared:
        raise ValueError("no trainable series in dataset")

    state = adam_init(weights)
    step_losses: list[float] = []
    epoch_losses: list[float] = []
    delta = config.fd_step
    for _epoch in range(config.epochs):
        order = rng.permutation(len(prepared))
        epoch_vs = []
        for idx in order:
            window, future, dists = prepared[idx]
            raw, cache = forward_raw(spec, weights, window)
            rho, beta = squash(spec, raw)
            if not math.isfinite(rho) or (beta is not None and not math.isfinite(beta)):
                raise NonFiniteLoss(
                    f"non-finite prediction at step {len(step_losses)}: "
                    f"rho={rho}, beta={beta} (diverged weights?)"
                )
            noise = rng.standard_normal((config.paths_per_series, h))

            vs_center = _copula_vs(dists, future, rho, beta, h, noise)
            g_rho = (
                _copula_vs(dists, future, rho + delta, beta, h, noise)
                - _copula_vs(dists, future, rho - delta, beta, h, noise)
            ) / (2.0 * delta)
            d_raw = np.zeros(spec.n_outputs)
            d_raw[0] = g_rho * RHO_SQUASH * (1.0 - math.tanh(float(raw[0])) ** 2)
            if beta is not None:
                g_beta = (
                    _copula_vs(dists, future, rho, min(beta + delta, 1.0), h, noise)
                    - _copula_vs(dists, future, rho, max(beta - delta, 0.0), h, noise)
                ) / (2.0 * delta)
                d_raw[1] = g_beta * beta * (1.0 - beta)

            if not np.isfinite(vs_center) or not np.all(np.isfinite(d_raw)):
                raise NonFiniteLoss(
                    f"non-finite loss at step {len(step_losses)}: "
                    f"vs={vs_center}, d_raw={d_raw}, rho={rho}, beta={beta}"
                )
            grads = backward_raw(spec, weights, cache, d_raw)
            if trainable is not None:
                grads = {k: g for k, g in grads.items() if k in trainable}
            adam_step(weights, grads, state, config.learning_rate)
            step_losses.append(vs_center)
            epoch_vs.append(vs_center)
        epoch_losses.append(float(np.mean(epoch_vs)))
    return TrainResult(
        weights=weights,
        epoch_losses=epoch_losses,
        step_losses=step_losses,
        skipped_series=skipped,
    )


CHECKPOINT_VERSION = 1


def save_checkpoint(path, spec: NetworkSpec, weights: dict) -> None:
    payload = {
        "manifest": {
            "backbone": spec.backbone,
            "output_params": spec.output_params,
            "sizes": {k: list(v.shape) for k, v in weights.items()},
            "version": CHECKPOINT_VERSION,
        },
        "tensors": {k: v.tolist() for k, v in weights.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> tuple[NetworkSpec, dict]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    manifest = payload["manifest"]
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
    spec = NetworkSpec(
        backbone=manifest["backbone"], output_params=manifest["output_params"]
    )
    expected = expected_shapes(spec)
    weights = {}
    for name, shape in expected.items():
        if name not in payload["tensors"]:
            raise ValueError(f"checkpoint missing tensor {name}")
        arr = np.asarray(payload["tensors"][name], dtype=float)
        if arr.shape != shape:
            raise ValueError(
                f"tensor {name} has shape {arr.shape}, expected {shape}"
            )
        if list(arr.shape) != manifest["sizes"].get(name):
            raise ValueError(f"manifest size mismatch for {name}")
        weights[name] = arr
    return spec, weights
