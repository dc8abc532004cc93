"""
Single-layer LSTM with a dense read-out, forward pass and BPTT in numpy

Flat parameter layout (the order used in persisted models):

    W   (4h, f+h)  gate weights, row blocks input | forget | cell | output,
                   columns [x_t, h_{t-1}]
    b   (4h,)      gate biases, same block order
    v   (h,)       dense weights on the final hidden state
    c   (1,)       dense bias

for 4h(f+h) + 4h + h + 1 values in total.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import PredictorKind
from .base import BasePredictor
from .registry import PredictorRegistry

logger = logging.getLogger(__name__)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class _Unpacked:
    W: np.ndarray
    b: np.ndarray
    v: np.ndarray
    c: float


@dataclass
class _Step:
    z: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c_prev: np.ndarray
    c: np.ndarray


def lstm_parameter_count(features: int, hidden: int) -> int:
    return 4 * hidden * (features + hidden) + 4 * hidden + hidden + 1


class LSTMPredictor(BasePredictor):
    """LSTM over the window followed by a dense layer on the last hidden state"""

    kind = PredictorKind.LSTM

    def __init__(self, spec):
        super().__init__(spec)
        self.hidden = spec.hidden_size

    def parameter_count(self) -> int:
        return lstm_parameter_count(self.features, self.hidden)

    def init_parameters(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform(-s, s) weights with s = 1/sqrt(f+h); zero biases"""
        h, f = self.hidden, self.features
        scale = 1.0 / np.sqrt(f + h)
        W = rng.uniform(-scale, scale, size=(4 * h, f + h))
        v = rng.uniform(-scale, scale, size=h)
        return np.concatenate([W.ravel(), np.zeros(4 * h), v, np.zeros(1)])

    def unpack(self, parameters: np.ndarray) -> _Unpacked:
        h, f = self.hidden, self.features
        n_w = 4 * h * (f + h)
        return _Unpacked(
            W=parameters[:n_w].reshape(4 * h, f + h),
            b=parameters[n_w : n_w + 4 * h],
            v=parameters[n_w + 4 * h : n_w + 5 * h],
            c=float(parameters[n_w + 5 * h]),
        )

    def _forward(
        self, parameters: np.ndarray, inputs: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, list[_Step]]:
        p = self.unpack(parameters)
        h = self.hidden
        batch = len(inputs)
        h_t = np.zeros((batch, h))
        c_t = np.zeros((batch, h))
        steps = []
        for t in range(inputs.shape[1]):
            z = np.concatenate([inputs[:, t, :], h_t], axis=1)
            a = z @ p.W.T + p.b
            i = _sigmoid(a[:, :h])
            f = _sigmoid(a[:, h : 2 * h])
            g = np.tanh(a[:, 2 * h : 3 * h])
            o = _sigmoid(a[:, 3 * h :])
            c_prev = c_t
            c_t = f * c_prev + i * g
            h_t = o * np.tanh(c_t)
            steps.append(_Step(z, i, f, g, o, c_prev, c_t))
        return h_t @ p.v + p.c, h_t, steps

    def predict(self, parameters: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        return self._forward(parameters, inputs)[0]

    def loss_and_gradient(
        self, parameters: np.ndarray, inputs: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray]:
        """MAE over the batch and its gradient by backpropagation through time"""
        inputs = self.check_inputs(inputs)
        targets = np.asarray(targets, dtype=float)
        p = self.unpack(parameters)
        h, f = self.hidden, self.features
        batch = len(inputs)

        y, h_last, steps = self._forward(parameters, inputs)
        residual = y - targets
        loss = float(np.mean(np.abs(residual)))
        # np.sign(0) == 0: zero subgradient at the kink
        dy = np.sign(residual) / batch

        dv = h_last.T @ dy
        dc = dy.sum()
        dW = np.zeros_like(p.W)
        db = np.zeros_like(p.b)
        dh = np.outer(dy, p.v)
        dcell = np.zeros((batch, h))

        for step in reversed(steps):
            tanh_c = np.tanh(step.c)
            do = dh * tanh_c
            dcell = dcell + dh * step.o * (1.0 - tanh_c**2)
            di = dcell * step.g
            dg = dcell * step.i
            df = dcell * step.c_prev
            da = np.concatenate(
                [
                    di * step.i * (1.0 - step.i),
                    df * step.f * (1.0 - step.f),
                    dg * (1.0 - step.g**2),
                    do * step.o * (1.0 - step.o),
                ],
                axis=1,
            )
            dW += da.T @ step.z
            db += da.sum(axis=0)
            dh = (da @ p.W)[:, f:]
            dcell = dcell * step.f

        gradient = np.concatenate([dW.ravel(), db, dv, [dc]])
        return loss, gradient


PredictorRegistry.register(PredictorKind.LSTM, LSTMPredictor)
