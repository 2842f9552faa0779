"""Empirical checks of the analytical results, at a small scale.

Mean relaxed objective against its lower bound, sign alignment with and
without sign-flexible ends, the gradient bound on freeing signs, and the
per-dimension SER bounds.
"""

import numpy as np

from ciforge import analysis

r = analysis.prop1_check(1000, 16, 16, 16, seed=1)
print(f"relaxed alpha'^2: mean {r.empirical_value:.3f} +- {r.standard_error:.3f}, bound {r.bound_value}")

a = analysis.prop2_alignment(1000, 16, 16, 16, seed=2)
b = analysis.prop3_alignment(1000, 16, 16, 16, seed=2)
print(f"sign alignment: fixed ends {a.empirical_value:.3f} (expect 0.5), "
      f"half flexible {b.empirical_value:.3f} (expect 0.75)")

g = analysis.prop4_check(20, 16, 16, 16, seed=3)
print(f"gradient bound: {g.empirical_value:.0%} of {g.samples} instances, min margin {g.extra['min_margin']:.3g}")

rng = np.random.default_rng(4)
for scheme in ("meqam", "rmqam"):
    s = analysis.ser_bound_check(scheme, 4, 1.0, 100000, rng)
    print(f"{scheme} SER at sigma^2=1: {s.empirical_value:.4f} +- {s.standard_error:.4f}, bound {s.bound_value:.4f}")
