"""Four precoders on one 16x16 channel.

Zero forcing sends the nominal points; QAM-CIP relaxes the edge symbols
into their CI regions; ME-QAM and RM-QAM add sign-flexible regions, solved
either with the predicted sign pattern (PS-QP) or by full search (FS-QP).
Lower alpha^2 means less noise amplification at the receivers.
"""

import numpy as np

from ciforge import rbc
from ciforge.channel import realize, sample_channel
from ciforge.cip import assemble, hamming, precode

rng = np.random.default_rng(7)
chan = realize(sample_channel(16, 16, rng))
u = rng.random(16)

rows = [("qam", "zf"), ("qam", "lcqp"), ("meqam", "psqp"), ("meqam", "fsqp"), ("rmqam", "psqp"), ("rmqam", "fsqp")]
for scheme, strat in rows:
    c = rbc.build_constellation(scheme, 16)
    m = np.floor(u * c.M).astype(int)
    out = precode(c, chan, m, strat)
    assert np.array_equal(c.detect(out.s), m)
    print(f"{scheme:6s} {strat:5s} alpha^2 = {10 * np.log10(out.alpha2):6.2f} dB   QP solves = {out.qp_solves}")

# how close is the predicted sign pattern to the best one
c = rbc.build_meqam(16)
m = np.floor(u * 16).astype(int)
ps, fs = precode(c, chan, m, "psqp"), precode(c, chan, m, "fsqp")
print("\nsign-flexible coordinates:", assemble(c, chan, m).sf_idx.size)
print("Hamming distance predicted vs optimal:", hamming(ps.psi, fs.psi))
