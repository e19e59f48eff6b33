"""Feed-forward network surrogate for the effective diffusion coefficient.

The network maps jointly normalized (age, temperature) to ``log10 D_eff``
and is trained so the resulting critical-content depths match the wire
depths. Topology is 2 -> 10 -> 10 -> 1 with ReLU hidden layers, trained
full-batch with Adam. Gradients are computed by explicit backpropagation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError, DomainError
from .ingest import CalibrationPoint
from .model import ModelHyperparameters, concentration_from_diffusion, depth_from_diffusion
from .special import erf_inv

LN10 = np.log(10.0)
TOPOLOGY = (2, 10, 10, 1)


@dataclass(frozen=True)
class JointNormalizer:
    """One mean and one standard deviation shared by both input features."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise DomainError("normalizer std must be positive")

    @classmethod
    def fit(cls, t, temp) -> "JointNormalizer":
        values = np.concatenate([np.ravel(t), np.ravel(temp)]).astype(float)
        std = float(values.std())
        return cls(float(values.mean()), std if std > 0 else 1.0)

    def normalize(self, v):
        return (np.asarray(v, dtype=float) - self.mean) / self.std

    def denormalize(self, v):
        return np.asarray(v, dtype=float) * self.std + self.mean


@dataclass
class NetworkParameters:
    """Weights (``fan_in x fan_out``) and biases of each layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (TOPOLOGY[i], TOPOLOGY[i + 1]) or b.shape != (TOPOLOGY[i + 1],):
                raise DomainError(f"layer {i} has shape {w.shape}/{b.shape}, expected topology {TOPOLOGY}")

    @classmethod
    def init(cls, seed: int = 0, output_bias: float = -12.0) -> "NetworkParameters":
        """He-uniform hidden layers, LeCun-uniform output layer, zero hidden biases."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for i in range(len(TOPOLOGY) - 1):
            fan_in, fan_out = TOPOLOGY[i], TOPOLOGY[i + 1]
            gain = 6.0 if i < len(TOPOLOGY) - 2 else 3.0
            limit = np.sqrt(gain / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        biases[-1][:] = output_bias
        return cls(weights, biases)

    @classmethod
    def constant(cls, log10_d: float) -> "NetworkParameters":
        """A network whose output is ``10**log10_d`` for every input."""
        weights = [np.zeros((TOPOLOGY[i], TOPOLOGY[i + 1])) for i in range(len(TOPOLOGY) - 1)]
        biases = [np.zeros(TOPOLOGY[i + 1]) for i in range(len(TOPOLOGY) - 1)]
        biases[-1][:] = log10_d
        return cls(weights, biases)

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    @classmethod
    def unflatten(cls, theta) -> "NetworkParameters":
        theta = np.asarray(theta, dtype=float)
        weights, biases, k = [], [], 0
        for i in range(len(TOPOLOGY) - 1):
            n_w = TOPOLOGY[i] * TOPOLOGY[i + 1]
            weights.append(theta[k : k + n_w].reshape(TOPOLOGY[i], TOPOLOGY[i + 1]).copy())
            k += n_w
            biases.append(theta[k : k + TOPOLOGY[i + 1]].copy())
            k += TOPOLOGY[i + 1]
        return cls(weights, biases)

    def copy(self) -> "NetworkParameters":
        return NetworkParameters([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass(frozen=True)
class TrainConfig:
    """Adam settings and stopping rule.

    ``depth_unit`` is the length unit [m] in which the training loss is
    expressed; ``tol`` applies to successive differences of that loss.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 200_000
    tol: float = 1e-7
    depth_unit: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tolerance must be positive")
        if not self.depth_unit > 0:
            raise DomainError("depth unit must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _raw_forward(params: NetworkParameters, inputs: np.ndarray):
    """Return the log10 output and the layer activations needed for backprop."""
    acts = [inputs]
    pre = []
    h = inputs
    n_layers = len(params.weights)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
        acts.append(h)
    return h[:, 0], acts, pre


def _inputs(norm: JointNormalizer, t, temp) -> np.ndarray:
    t, temp = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(temp, dtype=float))
    return np.column_stack([norm.normalize(t.ravel()), norm.normalize(temp.ravel())])


def forward(params: NetworkParameters, norm: JointNormalizer, t, temp):
    """Effective diffusion coefficient [m²/s] predicted by the network."""
    shape = np.broadcast(np.asarray(t), np.asarray(temp)).shape
    log_d, _, _ = _raw_forward(params, _inputs(norm, t, temp))
    return (10.0**log_d).reshape(shape)


def _arrays(points: Sequence[CalibrationPoint]):
    if len(points) == 0:
        raise ValueError("at least one calibration point is required")
    return (
        np.array([p.x for p in points], dtype=float),
        np.array([p.t for p in points], dtype=float),
        np.array([p.temp for p in points], dtype=float),
    )


def _loss_and_grad(params, norm, x, t, temp, hyper, c_crit, unit=1.0, need_grad=True):
    """Depth MSE in ``unit``² and its gradient w.r.t. the flat parameter vector."""
    depth_factor = 2.0 * erf_inv(1.0 - c_crit / hyper.c_surface)
    if not np.isfinite(depth_factor) or c_crit <= 0:
        raise DomainError("critical content must lie in (0, c_surface)")
    inputs = _inputs(norm, t, temp)
    log_d, acts, pre = _raw_forward(params, inputs)
    d_eff = 10.0**log_d
    front = depth_factor * np.sqrt(d_eff * t)
    resid = (hyper.delta_x + front - x) / unit
    n = len(x)
    loss = float(np.mean(resid**2))
    if not need_grad:
        return loss, None
    # d x_hat / d log10 D = front * ln(10) / 2
    delta = (2.0 / n) * resid * (front / unit) * (LN10 / 2.0)
    delta = delta[:, None]
    grads_w, grads_b = [], []
    for i in reversed(range(len(params.weights))):
        grads_w.append(acts[i].T @ delta)
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ params.weights[i].T) * (pre[i - 1] > 0)
    grads_w.reverse()
    grads_b.reverse()
    grad = np.concatenate([a.ravel() for pair in zip(grads_w, grads_b) for a in pair])
    return loss, grad


def nn_loss(params, norm, points, hyper: ModelHyperparameters, c_crit: float) -> float:
    """Mean squared depth error [m²] of the network's diffusion coefficient."""
    x, t, temp = _arrays(points)
    return _loss_and_grad(params, norm, x, t, temp, hyper, c_crit, need_grad=False)[0]


def grad(params, norm, points, hyper: ModelHyperparameters, c_crit: float) -> np.ndarray:
    """Gradient of :func:`nn_loss` w.r.t. all weights and biases (flattened)."""
    x, t, temp = _arrays(points)
    return _loss_and_grad(params, norm, x, t, temp, hyper, c_crit)[1]


@dataclass
class TrainedNetwork:
    params: NetworkParameters
    norm: JointNormalizer
    loss_trace: list[float]
    converged: bool
    epochs: int
    config: TrainConfig = field(default_factory=TrainConfig)
    c_crit: float = 1.62

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1]

    def diffusion(self, t, temp):
        return forward(self.params, self.norm, t, temp)

    def to_dict(self) -> dict:
        return {
            "model": "nn",
            "topology": list(TOPOLOGY),
            "activation": "relu",
            "output": "log10_d_eff",
            "normalizer": {"mean": self.norm.mean, "std": self.norm.std},
            "weights": [w.tolist() for w in self.params.weights],
            "biases": [b.tolist() for b in self.params.biases],
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "c_crit": self.c_crit,
            "converged": self.converged,
            "epochs": self.epochs,
            "final_loss": self.final_loss,
        }

    def to_json(self, **meta) -> str:
        payload = dict(meta)
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedNetwork":
        params = NetworkParameters([np.array(w, dtype=float) for w in d["weights"]], [np.array(b, dtype=float) for b in d["biases"]])
        norm = JointNormalizer(d["normalizer"]["mean"], d["normalizer"]["std"])
        config = TrainConfig(**d.get("config", {}))
        return cls(params, norm, [d.get("final_loss", float("nan"))], d.get("converged", False), d.get("epochs", 0), config, d.get("c_crit", 1.62))


def train(
    points: Sequence[CalibrationPoint],
    hyper: ModelHyperparameters = ModelHyperparameters(),
    c_crit: float = 1.62,
    config: TrainConfig = TrainConfig(),
) -> TrainedNetwork:
    """Full-batch Adam training against the depth loss.

    Stops once the loss (in ``config.depth_unit``²) changes by less than
    ``config.tol`` between successive epochs, or after ``max_epochs``. The
    returned trace is in m² and its last entry corresponds to the returned
    parameters.

    Raises
    ------
    DivergenceError
        If the loss becomes non-finite.
    """
    x, t, temp = _arrays(points)
    norm = JointNormalizer.fit(t, temp)
    params = NetworkParameters.init(config.seed)
    with np.errstate(over="ignore", invalid="ignore"):
        return _adam(params, norm, x, t, temp, hyper, c_crit, config)


def _adam(params, norm, x, t, temp, hyper, c_crit, config):
    theta = params.flatten()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    unit = config.depth_unit
    b1, b2 = config.beta1, config.beta2
    loss, g = _loss_and_grad(params, norm, x, t, temp, hyper, c_crit, unit)
    trace = [loss * unit**2]
    converged = False
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**epoch)
        v_hat = v / (1 - b2**epoch)
        theta = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
        params = NetworkParameters.unflatten(theta)
        new_loss, g = _loss_and_grad(params, norm, x, t, temp, hyper, c_crit, unit)
        if not np.isfinite(new_loss):
            raise DivergenceError(f"loss became non-finite at epoch {epoch}")
        trace.append(new_loss * unit**2)
        if abs(new_loss - loss) < config.tol:
            converged = True
            break
        loss = new_loss
    # the scaled loss times unit² can differ from the m² loss in the last ulp
    trace[-1] = _loss_and_grad(params, norm, x, t, temp, hyper, c_crit, need_grad=False)[0]
    return TrainedNetwork(params, norm, trace, converged, epoch, config, c_crit)


def predicted_content(net: TrainedNetwork, points, hyper: ModelHyperparameters) -> np.ndarray:
    """Chloride content the trained network implies at each (x, t)."""
    x, t, temp = _arrays(points)
    return concentration_from_diffusion(x, net.diffusion(t, temp), t, hyper)


def predicted_depths(net: TrainedNetwork, points, c_crit: float, hyper: ModelHyperparameters) -> np.ndarray:
    _, t, temp = _arrays(points)
    return depth_from_diffusion(c_crit, net.diffusion(t, temp), t, hyper)
