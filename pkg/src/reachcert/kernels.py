"""Hot numeric loops.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with identical arithmetic order.  The public names at the bottom of the module
are bound to one or the other according to :data:`reachcert._jit.USE_NUMBA`.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

HIT, EXIT, CENSORED = 0, 1, 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# polynomial evaluation on a batch of points


@njit
def _eval_terms_nb(exps, coeffs, pts):
    npts = pts.shape[0]
    nvar = exps.shape[1]
    out = np.zeros(npts)
    for p in range(npts):
        acc = 0.0
        for t in range(coeffs.shape[0]):
            m = coeffs[t]
            for j in range(nvar):
                xj = pts[p, j]
                for _ in range(exps[t, j]):
                    m = m * xj
            acc = acc + m
        out[p] = acc
    return out


def _eval_terms_np(exps, coeffs, pts):
    pts = np.asarray(pts, dtype=np.float64)
    out = np.zeros(pts.shape[0])
    for t in range(coeffs.shape[0]):
        m = np.full(pts.shape[0], coeffs[t])
        for j in range(exps.shape[1]):
            xj = pts[:, j]
            for _ in range(int(exps[t, j])):
                m = m * xj
        out = out + m
    return out


# ---------------------------------------------------------------------------
# counter-based uniform stream keyed by (seed, trial, step)


@njit
def _mix64_nb(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit
def _uniform_nb(seed, trial, step):
    h = _mix64_nb(_mix64_nb(_mix64_nb(seed) ^ np.uint64(trial)) ^ np.uint64(step))
    return float(h >> _S11) * _INV53


def _mix64_np(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        return z ^ (z >> _S31)


def _uniform_np(seed, trials, step):
    s = _mix64_np(np.array([seed], dtype=np.uint64))
    h = _mix64_np(_mix64_np(s ^ trials.astype(np.uint64)) ^ np.uint64(step))
    return (h >> _S11).astype(np.float64) * _INV53


# ---------------------------------------------------------------------------
# Monte-Carlo reachability


@njit
def _in_boxes_nb(x, boxes):
    for b in range(boxes.shape[0]):
        inside = True
        for j in range(x.shape[0]):
            if x[j] < boxes[b, j, 0] or x[j] > boxes[b, j, 1]:
                inside = False
                break
        if inside:
            return True
    return False


@njit(nogil=True)
def _simulate_nb(dyn_exps, dyn_coeffs, offsets, support, cum_probs, x0,
                 target, domain, seed, trial_start, trials, horizon, avoid):
    n = x0.shape[0]
    m = support.shape[1]
    kinds = np.empty(trials, dtype=np.int8)
    steps = np.empty(trials, dtype=np.int64)
    z = np.empty(n + m)
    xn = np.empty(n)
    useed = np.uint64(seed)
    for i in range(trials):
        trial = trial_start + i
        for j in range(n):
            z[j] = x0[j]
        kind = CENSORED
        step = horizon
        for s in range(horizon + 1):
            x = z[:n]
            if _in_boxes_nb(x, target):
                kind = HIT
                step = s
                break
            if avoid and not _in_boxes_nb(x, domain):
                kind = EXIT
                step = s
                break
            if s == horizon:
                break
            u = _uniform_nb(useed, trial, s)
            jsel = cum_probs.shape[0] - 1
            for q in range(cum_probs.shape[0]):
                if u < cum_probs[q]:
                    jsel = q
                    break
            for q in range(m):
                z[n + q] = support[jsel, q]
            for c in range(n):
                acc = 0.0
                for t in range(offsets[c], offsets[c + 1]):
                    mono = dyn_coeffs[t]
                    for v in range(n + m):
                        for _ in range(dyn_exps[t, v]):
                            mono = mono * z[v]
                    acc = acc + mono
                xn[c] = acc
            for c in range(n):
                z[c] = xn[c]
        kinds[i] = kind
        steps[i] = step
    return kinds, steps


def _in_boxes_np(x, boxes):
    inside = np.zeros(x.shape[0], dtype=bool)
    for b in range(boxes.shape[0]):
        ok = np.all((x >= boxes[b, :, 0]) & (x <= boxes[b, :, 1]), axis=1)
        inside |= ok
    return inside


def _simulate_np(dyn_exps, dyn_coeffs, offsets, support, cum_probs, x0,
                 target, domain, seed, trial_start, trials, horizon, avoid):
    n = x0.shape[0]
    m = support.shape[1]
    kinds = np.full(trials, CENSORED, dtype=np.int8)
    steps = np.full(trials, horizon, dtype=np.int64)
    z = np.empty((trials, n + m))
    z[:, :n] = x0
    active = np.arange(trials)
    for s in range(horizon + 1):
        if active.size == 0:
            break
        x = z[active, :n]
        hit = _in_boxes_np(x, target)
        kinds[active[hit]] = HIT
        steps[active[hit]] = s
        keep = ~hit
        if avoid:
            out = keep & ~_in_boxes_np(x, domain)
            kinds[active[out]] = EXIT
            steps[active[out]] = s
            keep &= ~out
        active = active[keep]
        if s == horizon or active.size == 0:
            break
        u = _uniform_np(seed, trial_start + active, s)
        jsel = np.searchsorted(cum_probs, u, side="right")
        jsel = np.minimum(jsel, cum_probs.shape[0] - 1)
        za = z[active]
        za[:, n:] = support[jsel]
        xn = np.empty((active.size, n))
        for c in range(n):
            acc = np.zeros(active.size)
            for t in range(offsets[c], offsets[c + 1]):
                mono = np.full(active.size, dyn_coeffs[t])
                for v in range(n + m):
                    for _ in range(int(dyn_exps[t, v])):
                        mono = mono * za[:, v]
                acc = acc + mono
            xn[:, c] = acc
        za[:, :n] = xn
        z[active] = za
    return kinds, steps


eval_terms_numba = _eval_terms_nb
eval_terms_numpy = _eval_terms_np
simulate_numpy = _simulate_np


def simulate_numba(dyn_exps, dyn_coeffs, offsets, support, cum_probs, x0,
                   target, domain, seed, trial_start, trials, horizon, avoid):
    # a Python int >= 2**63 would be typed int64 and overflow
    return _simulate_nb(dyn_exps, dyn_coeffs, offsets, support, cum_probs, x0,
                        target, domain, np.uint64(seed), trial_start, trials, horizon, avoid)


if USE_NUMBA:
    eval_terms = _eval_terms_nb
    simulate = simulate_numba
else:
    eval_terms = _eval_terms_np
    simulate = _simulate_np
