"""Generic log-space HMM inference over an abstract state space.

Both aligners run on this module: forward-backward for posteriors and
expected transition counts, Viterbi for decoding.  All probabilities are
natural logs; impossible events are ``-inf``.  There is no stop state, so
every quantity is conditioned on the observation count.

State spaces can be large and transition structure sparse, so transitions
and emissions are callables over index arrays rather than materialized
matrices, and each observation step may restrict inference to an explicit
list of active states (states that can emit that observation).  Expected
transition counts can be aggregated under a caller-supplied key function
(for example a jump-distance bin) instead of a full K x K table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import InferenceError

# (from_states, to_states) -> matrix of log transition probabilities,
# shape (len(from_states), len(to_states))
TransitionFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
# (states, observation_index) -> vector of log emission probabilities
EmissionFn = Callable[[np.ndarray, int], np.ndarray]
# (from_states, to_states) -> integer matrix of aggregation keys
TransitionKeyFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class HmmSpec:
    """A fully specified HMM inference problem.

    ``active_states`` optionally lists, per observation, the states whose
    emission probability can be nonzero; inference then only visits those.
    When omitted, every state is active at every step.
    """

    num_states: int
    num_obs: int
    log_start: np.ndarray
    log_transition: TransitionFn
    log_emission: EmissionFn
    active_states: Optional[Sequence[np.ndarray]] = None
    transition_key: Optional[TransitionKeyFn] = None
    num_transition_keys: int = 0

    def __post_init__(self):
        if self.num_states < 1 or self.num_obs < 1:
            raise InferenceError("need at least one state and one observation")
        self.log_start = np.asarray(self.log_start, dtype=float)
        if self.log_start.shape != (self.num_states,):
            raise InferenceError("log_start must have one entry per state")
        total = logsumexp(self.log_start)
        if not np.isfinite(total) or abs(total) > 1e-6:
            raise InferenceError(f"start distribution sums to exp({total}), not 1")

    @classmethod
    def from_dense(cls, log_start, log_transition, log_emissions, **kwargs) -> "HmmSpec":
        """Build a spec from dense arrays.

        ``log_transition`` is (K, K) with rows indexed by source state;
        ``log_emissions`` is (n, K), one row per observation.
        """
        log_transition = np.asarray(log_transition, dtype=float)
        log_emissions = np.asarray(log_emissions, dtype=float)
        k = log_transition.shape[0]
        if log_transition.shape != (k, k):
            raise InferenceError("log_transition must be square")
        if log_emissions.ndim != 2 or log_emissions.shape[1] != k:
            raise InferenceError("log_emissions must be (num_obs, num_states)")

        def trans(frm: np.ndarray, to: np.ndarray) -> np.ndarray:
            return log_transition[np.ix_(frm, to)]

        def emit(states: np.ndarray, obs: int) -> np.ndarray:
            return log_emissions[obs, states]

        return cls(
            num_states=k,
            num_obs=log_emissions.shape[0],
            log_start=log_start,
            log_transition=trans,
            log_emission=emit,
            **kwargs,
        )


@dataclass
class PosteriorTable:
    """Posteriors and expected counts from one forward-backward pass.

    ``state_posteriors`` is (num_obs, num_states); rows sum to 1.
    ``pair_posteriors`` is either a (K, K) matrix of expected transition
    counts or, when the spec aggregates by key, a vector indexed by key.
    """

    state_posteriors: np.ndarray
    pair_posteriors: np.ndarray
    log_likelihood: float
    log_likelihood_backward: float


def _active(spec: HmmSpec, obs: int) -> np.ndarray:
    if spec.active_states is None:
        return np.arange(spec.num_states)
    states = np.asarray(spec.active_states[obs], dtype=int)
    if states.size == 0:
        raise InferenceError(f"observation {obs} has no active states")
    return states


def _emission(spec: HmmSpec, states: np.ndarray, obs: int) -> np.ndarray:
    em = np.asarray(spec.log_emission(states, obs), dtype=float)
    if np.isnan(em).any():
        raise InferenceError(f"NaN emission at observation {obs}")
    if np.max(em) == -np.inf:
        raise InferenceError(
            f"observation {obs} is impossible under every state (all-zero emissions)"
        )
    return em


def _transition_block(spec: HmmSpec, frm: np.ndarray, to: np.ndarray, obs: int) -> np.ndarray:
    block = np.asarray(spec.log_transition(frm, to), dtype=float)
    if block.shape != (frm.size, to.size):
        raise InferenceError("log_transition returned a block of the wrong shape")
    if np.isnan(block).any():
        raise InferenceError(f"NaN transition entering observation {obs}")
    return block


def forward_backward(spec: HmmSpec) -> PosteriorTable:
    """Exact posteriors, expected transition counts, and log likelihood."""
    n = spec.num_obs
    actives = [_active(spec, j) for j in range(n)]
    emissions = [_emission(spec, actives[j], j) for j in range(n)]
    blocks = [
        _transition_block(spec, actives[j], actives[j + 1], j + 1) for j in range(n - 1)
    ]

    alphas: list[np.ndarray] = [spec.log_start[actives[0]] + emissions[0]]
    for j in range(1, n):
        prev = alphas[j - 1][:, None] + blocks[j - 1]
        alpha = emissions[j] + logsumexp(prev, axis=0)
        if np.max(alpha) == -np.inf:
            raise InferenceError(f"no path reaches observation {j}")
        alphas.append(alpha)
    log_z = float(logsumexp(alphas[-1]))

    betas: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    betas[-1] = np.zeros(actives[-1].size)
    for j in range(n - 2, -1, -1):
        nxt = blocks[j] + (emissions[j + 1] + betas[j + 1])[None, :]
        betas[j] = logsumexp(nxt, axis=1)
    log_z_backward = float(
        logsumexp(spec.log_start[actives[0]] + emissions[0] + betas[0])
    )

    posteriors = np.zeros((n, spec.num_states))
    for j in range(n):
        row = np.exp(alphas[j] + betas[j] - log_z)
        posteriors[j, actives[j]] = row / row.sum()

    if spec.transition_key is not None:
        pair = np.zeros(spec.num_transition_keys)
    else:
        pair = np.zeros((spec.num_states, spec.num_states))
    for j in range(n - 1):
        xi = np.exp(
            alphas[j][:, None]
            + blocks[j]
            + (emissions[j + 1] + betas[j + 1])[None, :]
            - log_z
        )
        if np.isnan(xi).any():
            raise InferenceError(f"NaN transition posterior at observation {j}")
        if spec.transition_key is not None:
            keys = np.asarray(spec.transition_key(actives[j], actives[j + 1]), dtype=int)
            np.add.at(pair, keys.ravel(), xi.ravel())
        else:
            pair[np.ix_(actives[j], actives[j + 1])] += xi

    return PosteriorTable(
        state_posteriors=posteriors,
        pair_posteriors=pair,
        log_likelihood=log_z,
        log_likelihood_backward=log_z_backward,
    )


def viterbi(spec: HmmSpec) -> tuple[list[int], float]:
    """Most probable state path; ties break toward the lower state index."""
    n = spec.num_obs
    actives = [_active(spec, j) for j in range(n)]

    delta = spec.log_start[actives[0]] + _emission(spec, actives[0], 0)
    backpointers: list[np.ndarray] = []
    for j in range(1, n):
        block = _transition_block(spec, actives[j - 1], actives[j], j)
        scores = delta[:, None] + block
        best = np.argmax(scores, axis=0)  # first maximum = lowest state index
        delta = _emission(spec, actives[j], j) + scores[best, np.arange(actives[j].size)]
        if np.max(delta) == -np.inf:
            raise InferenceError(f"no path reaches observation {j}")
        backpointers.append(best)

    last = int(np.argmax(delta))
    log_prob = float(delta[last])
    path_local = [last]
    for best in reversed(backpointers):
        path_local.append(int(best[path_local[-1]]))
    path_local.reverse()
    path = [int(actives[j][s]) for j, s in enumerate(path_local)]
    return path, log_prob
