"""Independent reference computations used by the tests.

Nothing here imports the simulator modules it is meant to check.
"""
from __future__ import annotations

import heapq
import math

# work units per microsecond at full speed; with lam = L/10 and alpha = K/100
# every quantity below is an exact integer
UNITS_PER_US = 1000


def edf_timeline_misses(periods_us, est_us, lam_tenths, alpha_pct, horizon_us):
    """Deadline misses of preemptive EDF on a 1 us timeline, in integer work units.

    Deadlines equal periods, all tasks release at 0, job demand is
    ``lam * est`` and the CPU does ``alpha`` of full-speed work per tick.
    Leftover capacity inside a tick carries to the next ready job.
    """
    demand = [lam_tenths * c * UNITS_PER_US // 10 for c in est_us]
    per_tick = alpha_pct * UNITS_PER_US // 100
    ready = []  # (deadline, task, remaining)
    misses = 0
    t = 0
    while t < horizon_us:
        for i, h in enumerate(periods_us):
            if t % h == 0:
                heapq.heappush(ready, [t + h, i, demand[i]])
        budget = per_tick
        while budget and ready:
            job = ready[0]
            used = min(budget, job[2])
            job[2] -= used
            budget -= used
            if job[2] == 0:
                heapq.heappop(ready)
        t += 1
        # any job due at t that still has work has missed
        while ready and ready[0][0] <= t and ready[0][2] > 0:
            heapq.heappop(ready)
            misses += 1
        if not ready:
            # idle: jump to the next release
            nxt = min(((t + h - 1) // h) * h for h in periods_us)
            t = max(t, nxt)
    return misses


def hyperperiod_us(periods_us):
    out = 1
    for h in periods_us:
        out = out * h // math.gcd(out, h)
    return out


def steady_state_alpha(lam, omega_hat, u_r=0.95, alpha_min=0.1):
    return min(1.0, max(alpha_min, lam * omega_hat / u_r))


def ideal_ctdvs_energy(lams, omega_hat, u_r=0.95):
    """Average of alpha^2 over equal-length blocks at steady state."""
    return sum(steady_state_alpha(l, omega_hat, u_r) ** 2 for l in lams) / len(lams)


def ideal_settle_windows(lam, u0, kp, ki, u_r=0.95, band=0.01, n=200):
    """Windows until the saturation-free sampled loop stays within ``band`` of ``u_r``.

    Recurrence ``S += e; beta += kp*e + ki*S; U = lam*beta`` started from the
    measurement ``u0`` with ``beta = u0/lam`` and an empty integrator.
    """
    beta, s, u = u0 / lam, 0.0, u0
    last_out = 0 if abs(u - u_r) >= band else -1
    for j in range(1, n):
        e = u_r - u
        s += e
        beta += kp * e + ki * s
        u = lam * beta
        if abs(u - u_r) >= band:
            last_out = j
    return last_out + 1
