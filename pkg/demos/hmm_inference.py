"""Log-space forward-backward and Viterbi on a small weather-style chain.

A two-state HMM (dry/wet) emits three observations.  The demo prints the
posterior state table, the pair posteriors that drive EM counts, and the
Viterbi path, then cross-checks the likelihood by summing all 2^3 paths.

Run: python3 demos/hmm_inference.py
"""

import itertools

import numpy as np

from bookalign.hmm import HmmSpec, forward_backward, viterbi

STATES = ["dry", "wet"]

log_start = np.log([0.6, 0.4])
log_transition = np.log([[0.7, 0.3],
                         [0.4, 0.6]])
# three observations: emission probability per (obs, state)
log_emissions = np.log([[0.9, 0.2],
                        [0.1, 0.8],
                        [0.5, 0.5]])


def main():
    spec = HmmSpec.from_dense(log_start, log_transition, log_emissions)
    table = forward_backward(spec)

    print("state posteriors  P(z_t = s | all observations):")
    for t, row in enumerate(table.state_posteriors):
        cells = "  ".join(f"{STATES[s]}={row[s]:.4f}" for s in range(2))
        print(f"  t={t}: {cells}")

    print("\nexpected transition counts  sum_t P(z_t = s, z_t+1 = s'):")
    for s in range(2):
        for s2 in range(2):
            print(f"  {STATES[s]}->{STATES[s2]}  {table.pair_posteriors[s, s2]:.4f}")

    path, best = viterbi(spec)
    print(f"\nviterbi path: {' '.join(STATES[s] for s in path)}"
          f"  (log prob {best:.4f})")

    # brute force: likelihood is the sum over all state sequences
    total = -np.inf
    for seq in itertools.product(range(2), repeat=3):
        lp = log_start[seq[0]] + log_emissions[0, seq[0]]
        for t in range(1, 3):
            lp += log_transition[seq[t - 1], seq[t]] + log_emissions[t, seq[t]]
        total = np.logaddexp(total, lp)
    print(f"\nlog likelihood: forward-backward {table.log_likelihood:.10f}")
    print(f"                enumeration      {total:.10f}")


if __name__ == "__main__":
    main()
