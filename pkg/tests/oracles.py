"""Independent reference implementations used only by the tests.

None of these call into the package's numeric code: each one re-derives its
answer from scratch in plain Python, exact rationals or brute force.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import sympy as sp

REST = 37


# -- LSTM cell, scalar transcription ----------------------------------------


def _sig(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def lstm_cell_scalar(gates, x, h, c, tanh_output=False):
    """One step written out per element with Python floats.

    ``gates`` is four R x (len(x) + R) nested lists in (input, forget, output,
    cell) order.
    """
    xa = list(x) + list(h)
    pre = [[sum(w_ij * x_j for w_ij, x_j in zip(row, xa)) for row in g] for g in gates]
    i = [_sig(z) for z in pre[0]]
    f = [_sig(z) for z in pre[1]]
    o = [_sig(z) for z in pre[2]]
    g = [math.tanh(z) for z in pre[3]]
    c_new = [fk * ck + ik * gk for fk, ck, ik, gk in zip(f, c, i, g)]
    if tanh_output:
        h_new = [ok * math.tanh(ck) for ok, ck in zip(o, c_new)]
    else:
        h_new = [ck * ok for ck, ok in zip(c_new, o)]
    return h_new, c_new


# -- pruning -----------------------------------------------------------------


def best_mask_objective(v, nz: int) -> float:
    """min over all masks with nz ones of ||v - f*v||^2, by enumeration."""
    n = len(v)
    best = math.inf
    for keep in itertools.combinations(range(n), nz):
        kept = set(keep)
        obj = sum(float(v[j]) ** 2 for j in range(n) if j not in kept)
        best = min(best, obj)
    return best


def mask_objective(v, keep) -> float:
    kept = set(int(k) for k in keep)
    return sum(float(v[j]) ** 2 for j in range(len(v)) if j not in kept)


# -- performance formulas, symbolic -----------------------------------------

_R, _NZ, _N, _TR, _TC = sp.symbols("R nz n tr tc", positive=True, integer=True)
WORKLOAD = 4 * _N * (2 * _NZ + 2 * _R + 1) + REST * _R
BYTES = 4 * (4 * _N * (_NZ + _R + 1) + 2 * _R)
CTC = WORKLOAD / BYTES
II = sp.Max(_N * sp.Max(sp.ceiling(_R / _TR), sp.ceiling(_NZ / _TC)), REST * sp.ceiling(_R / _TR))


# lambdify with the sympy backend keeps every operation exact
_workload = sp.lambdify((_R, _NZ, _N), WORKLOAD, modules="sympy")
_ctc = sp.lambdify((_R, _NZ, _N), CTC, modules="sympy")
_ii = sp.lambdify((_R, _NZ, _N, _TR, _TC), II, modules="sympy")


def _ints(*args):
    return [sp.Integer(int(a)) for a in args]


def sym_workload(R, nz, n) -> sp.Integer:
    return sp.Integer(_workload(*_ints(R, nz, n)))


def sym_ctc(R, nz, n) -> sp.Rational:
    return sp.Rational(_ctc(*_ints(R, nz, n)))


def sym_ii(R, nz, n, tr, tc) -> sp.Integer:
    return sp.Integer(_ii(*_ints(R, nz, n, tr, tc)))


def as_fraction(q) -> Fraction:
    q = sp.Rational(q)
    return Fraction(int(q.p), int(q.q))


# -- design-space search, brute force ---------------------------------------


def _cdiv(a, b):
    return -(-a // b)


def brute_force_best(peak_ops, bw, clock, budget, onchip_ok, R, nz, n_steps):
    """Exhaustive argmax over every (tr, tc) in exact rationals.

    Returns ``(tr, tc)`` or None; ties go to the smaller tr*tc, then smaller tr.
    """
    work = 4 * n_steps * (2 * nz + 2 * R + 1) + REST * R
    nbytes = 4 * (4 * n_steps * (nz + R + 1) + 2 * R)
    memory_roof = Fraction(work, nbytes) * Fraction(bw)
    best_key = None
    best = None
    for tr in range(1, R + 1):
        for tc in range(1, nz + 1):
            if 4 * (tc + 3 * tr) + tr > budget or not onchip_ok:
                continue
            ii = max(n_steps * max(_cdiv(R, tr), _cdiv(nz, tc)), REST * _cdiv(R, tr))
            perf = Fraction(work, ii) * Fraction(clock)
            att = min(perf, Fraction(peak_ops), memory_roof)
            key = (-att, tr * tc, tr)
            if best_key is None or key < best_key:
                best_key, best = key, (tr, tc)
    return best


def brute_force_baseline(peak_ops, bw, clock, budget, onchip_ok, R, C):
    work = 8 * R * C + REST * R
    nbytes = 4 * (4 * R * C + C + 2 * R)
    memory_roof = Fraction(work, nbytes) * Fraction(bw)
    best_key = None
    best = None
    for tr in range(1, R + 1):
        for tc in range(1, C + 1):
            if 4 * (tr * tc + 3 * tr) + tr > budget or not onchip_ok:
                continue
            ii = max(_cdiv(R, tr) * _cdiv(C, tc), REST * _cdiv(R, tr))
            att = min(Fraction(work, ii) * Fraction(clock), Fraction(peak_ops), memory_roof)
            key = (-att, tr * tc, tr)
            if best_key is None or key < best_key:
                best_key, best = key, (tr, tc)
    return best


# -- switching point, linear scan --------------------------------------------


def scan_crossover(approx_pts, base_pts):
    """First budget (from the later of the two first outputs) where baseline >= approx.

    Points are (latency, accuracy) lists sorted by latency.
    """

    def at(pts, t):
        acc = None
        for lat, a in pts:
            if lat <= t:
                acc = a
        return acc

    start = max(approx_pts[0][0], base_pts[0][0])
    for t in sorted({lat for lat, _ in approx_pts + base_pts if lat >= start}):
        if at(base_pts, t) >= at(approx_pts, t):
            return t
    return math.inf
