"""
A free Gaussian packet and its transmission probability
=======================================================

Build the incident packet, let it move without any barrier and compare the
probability found beyond a detector plane with the closed-form curve.
"""

import numpy as np

from superarrivals import (PacketSpec, PropagatorConfig, SpatialGrid, TransmissionObserver,
                           UnitSystem, build_packet, free_transmission, propagate)

# hbar = 1, m = 1/2, sigma1 = 0.05; t0 and E0 follow from these
u = UnitSystem()
print(f"t0 = {u.t0:.4e}, E0 = {u.E0:.1f}")

# a box of 200 sigma0 is plenty for 40 t0 of free flight
grid = SpatialGrid(-60 * u.sigma0, 140 * u.sigma0, 26215)
packet = PacketSpec().resolved(u)
psi0 = build_packet(packet, grid, u)

# a detector plane 10 sigma1 to the right of the origin
x_d = 10 * u.sigma1
obs = TransmissionObserver(grid, x_d)
cfg = PropagatorConfig(dt=40 * u.t0 / 8192, t_end=40 * u.t0, store_every=128)
propagate(psi0, None, grid, u, cfg, [obs])

t = np.asarray(obs.times)
numeric = np.asarray(obs.values)[:, 0]
exact = free_transmission(t, x_d, packet.x0, packet.sigma0, packet.p0, u)

for k in range(0, len(t), len(t) // 8):
    print(f"t = {t[k] / u.t0:6.2f} t0   T = {numeric[k]:.5f}   closed form {exact[k]:.5f}")
print("largest deviation:", np.abs(numeric - exact).max())
