"""Regenerate the JSON ensembles under fixtures/.

reference_n5.json holds five reference weighted vectors psi~_i (row i is
sqrt(p_i) psi_i, 6 significant digits). Their squared norms sum to 1 only to
about 1e-6, so p_i = ||psi~_i||^2 is renormalized and each state normalized.
"""

from pathlib import Path

import numpy as np

from lipmed import ensemble as en

c = complex
PSI_TILDE = np.array([
    [0.320457, c(0.123687, 0.0117558), c(0.117838, -0.027942), c(0.109674, 0.0167151),
     c(0.0860555, 0.00780123)],
    [c(0.123687, -0.0117558), 0.397851, c(0.169692, -0.0506685), c(0.125198, -0.0244774),
     c(0.124106, -0.0261114)],
    [c(0.117838, 0.027942), c(0.169692, 0.0506685), 0.404725, c(0.13847, 0.0177653),
     c(0.122277, -0.0249506)],
    [c(0.109674, -0.0167151), c(0.125198, 0.0244774), c(0.13847, -0.0177653), 0.373791,
     c(0.110387, -0.013984)],
    [c(0.0860555, -0.00780123), c(0.124106, 0.0261114), c(0.122277, 0.0249506),
     c(0.110387, 0.013984), 0.33677],
], dtype=complex)


def reference_ensemble():
    w = np.sum(np.abs(PSI_TILDE) ** 2, axis=1)
    states = PSI_TILDE / np.sqrt(w)[:, None]
    states /= np.linalg.norm(states, axis=1)[:, None]
    return en.Ensemble(w / w.sum(), states)


def main(out=Path(__file__).resolve().parent.parent / "fixtures"):
    out.mkdir(exist_ok=True)
    en.save(reference_ensemble(), out / "reference_n5.json")
    en.save(en.Ensemble(np.full(4, 0.25), np.eye(4)), out / "identity_n4.json")
    en.save(en.two_state_ensemble(0.6, 0.5), out / "helstrom_2state.json")


if __name__ == "__main__":
    main()
