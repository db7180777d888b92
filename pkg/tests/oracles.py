"""Reference computations that share no code with the package under test.

``exact_steady_state`` solves the switched linear circuit with matrix
exponentials, so it has no time-step error at all. ``ols_fraction`` fits a
line in exact rational arithmetic.
"""

from fractions import Fraction

import numpy as np
from scipy.linalg import expm


def _affine(p, on):
    rb = p["esr"] + p.get("r_track", 0.0)
    r = p["r_load"]
    l, c = p["l"], p["c"]
    rl, rds, vd = p.get("r_l", 0.0), p.get("r_dson", 0.0), p.get("v_diode", 0.0)
    if on:
        a = [[-(rl + rds) / l, 0.0], [0.0, -1.0 / ((r + rb) * c)]]
        b = [p["v_in"] / l, 0.0]
    else:
        # KCL at the output node with the capacitor branch (C + rb) in parallel with r
        a = [[-(rl + rb * r / (r + rb)) / l, -r / (r + rb) / l],
             [r / ((r + rb) * c), -1.0 / ((r + rb) * c)]]
        b = [(p["v_in"] - vd) / l, 0.0]
    aug = np.zeros((3, 3))
    aug[:2, :2] = a
    aug[:2, 2] = b
    return aug


def _flow(p, on, dt):
    return expm(_affine(p, on) * dt)


def exact_steady_state(p, sample_rate):
    """Exact periodic orbit sampled at ``k / sample_rate``.

    Returns ``(x0, samples, v_out, v_mos)`` where ``samples`` has shape (n, 2).
    """
    period = 1.0 / p["f_sw"]
    t_on = p["duty"] * period
    full = _flow(p, False, period - t_on) @ _flow(p, True, t_on)
    phi, gamma = full[:2, :2], full[:2, 2]
    x0 = np.linalg.solve(np.eye(2) - phi, gamma)
    n = int(np.ceil(period * sample_rate - 1e-9))
    rb = p["esr"] + p.get("r_track", 0.0)
    r = p["r_load"]
    samples, v_out, v_mos = [], [], []
    x_sw = (_flow(p, True, t_on) @ np.append(x0, 1.0))
    for k in range(n):
        t = k / sample_rate
        if t < t_on - 1e-9 * period:
            x = (_flow(p, True, t) @ np.append(x0, 1.0))[:2]
            vo = x[1] * r / (r + rb)
            vm = p.get("r_dson", 0.0) * x[0]
        else:
            x = (_flow(p, False, t - t_on) @ x_sw)[:2]
            vo = (rb * r * x[0] + r * x[1]) / (r + rb)
            vm = vo + p.get("v_diode", 0.0)
        samples.append(x)
        v_out.append(vo)
        v_mos.append(vm)
    return x0, np.array(samples), np.array(v_out), np.array(v_mos)


def ols_fraction(x, y):
    """Slope, intercept and r^2 of the least-squares line, computed exactly."""
    xs = [Fraction(v) for v in x]
    ys = [Fraction(v) for v in y]
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(a * a for a in xs)
    sxy = sum(a * b for a, b in zip(xs, ys))
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    ybar = sy / n
    ss_tot = sum((b - ybar) ** 2 for b in ys)
    ss_res = sum((b - (slope * a + intercept)) ** 2 for a, b in zip(xs, ys))
    r2 = 1 - ss_res / ss_tot if ss_tot else Fraction(0)
    return slope, intercept, r2


def brute_force_line(x, y, steps=2001):
    """Grid search of the squared-error surface around the exact solution."""
    slope, intercept, _ = ols_fraction(x, y)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s_grid = float(slope) + np.linspace(-0.05, 0.05, steps)
    best = None
    for s in s_grid:
        b = np.mean(y - s * x)  # optimal intercept for this slope
        err = np.sum((y - s * x - b) ** 2)
        if best is None or err < best[0]:
            best = (err, s, b)
    return best[1], best[2]
