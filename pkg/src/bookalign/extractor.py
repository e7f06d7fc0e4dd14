"""L2-regularized binary logistic regression over sparse sentence features.

Trained by batch gradient descent with a backtracking line search; the loss
is mean log-loss plus (lambda/2)||w||^2 with the bias left unregularized.
The objective and gradient are exposed separately so the gradient can be
checked against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

BIAS_NAME = "__BIAS__"


@dataclass
class ExtractorModel:
    weights: np.ndarray
    bias: float
    lam: float
    feature_names: list[str]

    def predict_proba(self, matrix: sparse.csr_matrix) -> np.ndarray:
        return _sigmoid(matrix @ self.weights + self.bias)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#model\tlogistic\tlambda={self.lam:g}\n")
            fh.write(f"{BIAS_NAME}\t{self.bias:.12g}\n")
            for name, w in zip(self.feature_names, self.weights):
                if w != 0.0:
                    fh.write(f"{name}\t{w:.12g}\n")


def load_model(path, feature_names: list[str]) -> ExtractorModel:
    index = {n: i for i, n in enumerate(feature_names)}
    weights = np.zeros(len(feature_names))
    bias = 0.0
    lam = 1.0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if len(header) < 2 or header[0] != "#model" or header[1] != "logistic":
            raise ValueError(f"{path}: not a model file")
        for part in header[2:]:
            if part.startswith("lambda="):
                lam = float(part[len("lambda="):])
        for line in fh:
            name, _, value = line.rstrip("\n").partition("\t")
            if name == BIAS_NAME:
                bias = float(value)
            elif name in index:
                weights[index[name]] = float(value)
            else:
                raise ValueError(f"{path}: unknown feature {name!r}")
    return ExtractorModel(weights=weights, bias=bias, lam=lam,
                          feature_names=list(feature_names))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(params: np.ndarray, matrix: sparse.csr_matrix,
                      labels: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
    """Objective and gradient at ``params`` = [weights..., bias]."""
    w, b = params[:-1], params[-1]
    n = matrix.shape[0]
    z = matrix @ w + b
    # mean of log(1 + e^z) - y z, computed without overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    loss += 0.5 * lam * float(w @ w)
    resid = (_sigmoid(z) - labels) / n
    grad = np.empty_like(params)
    grad[:-1] = matrix.T @ resid + lam * w
    grad[-1] = resid.sum()
    return loss, grad


def train_extractor(matrix: sparse.csr_matrix, labels: np.ndarray,
                    feature_names: list[str], lam: float = 1.0,
                    tol: float = 1e-6, max_iters: int = 2000) -> ExtractorModel:
    """Fit weights from zeros; stops at gradient norm ``tol``.

    Each step takes the steepest-descent direction with a halving line
    search, so the objective never increases.
    """
    labels = np.asarray(labels, dtype=float)
    if labels.min() == labels.max():
        raise ValueError("training data contains a single class")
    if matrix.shape[0] != labels.size:
        raise ValueError("feature matrix and labels disagree on row count")

    params = np.zeros(matrix.shape[1] + 1)
    loss, grad = loss_and_gradient(params, matrix, labels, lam)
    for _ in range(max_iters):
        gnorm2 = float(grad @ grad)
        if math.sqrt(gnorm2) <= tol:
            break
        step = 1.0
        while step > 1e-14:
            candidate = params - step * grad
            new_loss, new_grad = loss_and_gradient(candidate, matrix, labels, lam)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                params, loss, grad = candidate, new_loss, new_grad
                break
            step *= 0.5
        else:
            break  # no improving step at float precision
    return ExtractorModel(
        weights=params[:-1], bias=float(params[-1]), lam=lam,
        feature_names=list(feature_names),
    )
