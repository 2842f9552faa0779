"""Complex channels as real matrices.

The precoders work on the stacked real vector [Re s; Im s] and the real
form of H. This script checks that the quadratic form behind the
transmit power is the same in both pictures, and that zero forcing
scales with it.
"""

import numpy as np

from ciforge.channel import gram_inverse, real_stack, realize, sample_channel, widely_linear, zf_precode

rng = np.random.default_rng(1)
H = sample_channel(4, 6, rng)
s = np.array([1 + 1j, -3 + 1j, 1 - 3j, 3 + 3j])

complex_form = np.real(np.conj(s) @ np.linalg.solve(H @ H.conj().T, s))
x = real_stack(s)
real_form = x @ gram_inverse(widely_linear(H)) @ x
print(f"s^H (H H^H)^-1 s = {complex_form:.10f}")
print(f"x^T Q x          = {real_form:.10f}")

x_zf, alpha2 = zf_precode(H, s)
print(f"ZF ||x||^2       = {alpha2:.10f}")
# every user sees exactly its own symbol
print("H x =", np.round(H @ x_zf, 10))

chan = realize(H)
print("real channel shape", chan.Hd.shape, "Gram inverse shape", chan.Q.shape)
