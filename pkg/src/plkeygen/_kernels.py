"""Hot numeric kernels, jitted with numba and mirrored in pure numpy.

The numba path is used when numba imports cleanly and the environment
variable ``PLKEYGEN_DISABLE_NUMBA`` is unset (or falsy).  Both paths are
kept argument-for-argument identical so they can be benchmarked and
cross-checked against each other (see ``benchmarks/bench_kernels.py``).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("PLKEYGEN_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}

try:
    if _DISABLE:
        raise ImportError("numba disabled via PLKEYGEN_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised via env flag
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# Per-bin status codes of the transmission-matrix solve.
STATUS_OK = 0
STATUS_DEGENERATE = 1
STATUS_NO_ROOT = 2
STATUS_BOTH_REJECTED = 3
STATUS_DET_FAIL = 4

# Probe magnitude above which an input impedance is treated as an open
# (its real part is then numerically meaningless).
_PROBE_OPEN_CAP = 1e12
_TINY = 1e-300


# ---------------------------------------------------------------------------
# cascade of per-bin 2x2 transmission matrices
# ---------------------------------------------------------------------------

def _cascade_chain_numpy(stack: np.ndarray) -> np.ndarray:
    a1, b1, c1, d1 = stack[0]
    for k in range(1, stack.shape[0]):
        a2, b2, c2, d2 = stack[k]
        a1, b1, c1, d1 = (
            a1 * a2 + b1 * c2,
            a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2,
            c1 * b2 + d1 * d2,
        )
    return np.stack([a1, b1, c1, d1])


@njit(cache=True)
def _cascade_chain_numba(stack: np.ndarray) -> np.ndarray:  # pragma: no cover - jitted
    n_mat, _, n_bins = stack.shape
    out = stack[0].copy()
    for k in range(1, n_mat):
        for i in range(n_bins):
            a1 = out[0, i]
            b1 = out[1, i]
            c1 = out[2, i]
            d1 = out[3, i]
            a2 = stack[k, 0, i]
            b2 = stack[k, 1, i]
            c2 = stack[k, 2, i]
            d2 = stack[k, 3, i]
            out[0, i] = a1 * a2 + b1 * c2
            out[1, i] = a1 * b2 + b1 * d2
            out[2, i] = c1 * a2 + d1 * c2
            out[3, i] = c1 * b2 + d1 * d2
    return out


def cascade_chain(stack: np.ndarray) -> np.ndarray:
    """Left-to-right product of ``stack[k]`` matrices, one per cascade block.

    ``stack`` has shape (n_blocks, 4, n_bins) with rows A, B, C, D.
    """
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    if stack.shape[0] == 1:
        return stack[0].copy()
    if NUMBA_ENABLED:
        return _cascade_chain_numba(stack)
    return _cascade_chain_numpy(stack)


# ---------------------------------------------------------------------------
# local-maximum detection on a power trace
# ---------------------------------------------------------------------------

def _peak_indices_numpy(power: np.ndarray, floor: float) -> np.ndarray:
    if power.size < 3:
        return np.empty(0, dtype=np.int64)
    mid = power[1:-1]
    keep = (mid > power[:-2]) & (mid >= power[2:]) & (mid >= floor)
    return np.flatnonzero(keep).astype(np.int64) + 1


@njit(cache=True)
def _peak_indices_numba(power: np.ndarray, floor: float) -> np.ndarray:  # pragma: no cover
    n = power.shape[0]
    out = np.empty(n, np.int64)
    m = 0
    for i in range(1, n - 1):
        p = power[i]
        if p > power[i - 1] and p >= power[i + 1] and p >= floor:
            out[m] = i
            m += 1
    return out[:m]


def peak_indices(power: np.ndarray, floor: float) -> np.ndarray:
    """Interior indices that rise strictly and fall non-strictly, above ``floor``."""
    power = np.ascontiguousarray(power, dtype=np.float64)
    if NUMBA_ENABLED:
        return _peak_indices_numba(power, float(floor))
    return _peak_indices_numpy(power, float(floor))


# ---------------------------------------------------------------------------
# per-bin ABCD recovery from (Zin1, H1, Zin2) plus the unit-determinant
# constraint: three linear equations leave a one-parameter family; the
# determinant turns the parameter into a quadratic with two candidate roots.
# ---------------------------------------------------------------------------

ROOT_RULE_PASSIVITY = 0
ROOT_RULE_CONTINUITY = 1


@njit(cache=True)
def _candidate_passive(a, b, c, d, pass_tol):  # pragma: no cover - jitted
    # Input impedance must keep a nonnegative real part under passive
    # terminations; probe open/short/50-ohm at both ports.
    for k in range(6):
        if k == 0:
            num, den = a, c
        elif k == 1:
            num, den = b, d
        elif k == 2:
            num, den = d, c
        elif k == 3:
            num, den = b, a
        elif k == 4:
            num, den = 50.0 * a + b, 50.0 * c + d
        else:
            num, den = 50.0 * d + b, 50.0 * c + a
        if abs(den) < _TINY:
            continue
        z = num / den
        az = abs(z)
        if az > _PROBE_OPEN_CAP:
            continue
        if z.real < -pass_tol * (az + 1.0):
            return False
    return True


def _candidate_passive_py(a, b, c, d, pass_tol):
    for num, den in (
        (a, c),
        (b, d),
        (d, c),
        (b, a),
        (50.0 * a + b, 50.0 * c + d),
        (50.0 * d + b, 50.0 * c + a),
    ):
        if abs(den) < _TINY:
            continue
        z = num / den
        az = abs(z)
        if az > _PROBE_OPEN_CAP:
            continue
        if z.real < -pass_tol * (az + 1.0):
            return False
    return True


@njit(cache=True)
def _tmt_solve_numba(h1, z1, z2, zt, zl, rule, det_tol, pass_tol, rank_tol):  # pragma: no cover
    n = h1.shape[0]
    abcd = np.zeros((4, n), np.complex128)
    branch = np.full(n, -1, np.int8)
    status = np.zeros(n, np.uint8)
    residual = np.zeros(n, np.float64)
    abcd[0, :] = 1.0
    abcd[3, :] = 1.0

    mat = np.empty((3, 4), np.complex128)
    rhs = np.empty(3, np.complex128)
    have_prev = False
    prev = np.zeros(4, np.complex128)
    roots = np.empty(2, np.complex128)
    cand = np.empty((2, 4), np.complex128)

    for i in range(n):
        zli = zl[i]
        zti = zt[i]
        mat[0, 0] = zli
        mat[0, 1] = 1.0
        mat[0, 2] = -z1[i] * zli
        mat[0, 3] = -z1[i]
        mat[1, 0] = zli
        mat[1, 1] = 1.0
        mat[1, 2] = zli * zti
        mat[1, 3] = zti
        mat[2, 0] = -z2[i]
        mat[2, 1] = 1.0
        mat[2, 2] = -z2[i] * zli
        mat[2, 3] = zli
        rhs[0] = 0.0
        rhs[1] = zli / h1[i]
        rhs[2] = 0.0

        u_mat, sing, vh = np.linalg.svd(mat)
        if sing[2] < rank_tol * sing[0]:
            status[i] = STATUS_DEGENERATE
            continue

        x0 = np.zeros(4, np.complex128)
        for r in range(3):
            coef = (np.conj(u_mat[0, r]) * rhs[0]
                    + np.conj(u_mat[1, r]) * rhs[1]
                    + np.conj(u_mat[2, r]) * rhs[2]) / sing[r]
            for k in range(4):
                x0[k] += coef * np.conj(vh[r, k])
        v0 = np.conj(vh[3, 0])
        v1 = np.conj(vh[3, 1])
        v2c = np.conj(vh[3, 2])
        v3 = np.conj(vh[3, 3])

        qa = v0 * v3 - v2c * v1
        qb = x0[0] * v3 + v0 * x0[3] - x0[2] * v1 - v2c * x0[1]
        qc = x0[0] * x0[3] - x0[2] * x0[1] - 1.0

        n_roots = 0
        if abs(qa) > _TINY:
            sq = np.sqrt(qb * qb - 4.0 * qa * qc)
            if (np.conj(qb) * sq).real >= 0.0:
                qq = -0.5 * (qb + sq)
            else:
                qq = -0.5 * (qb - sq)
            if abs(qq) > _TINY:
                roots[0] = qq / qa
                roots[1] = qc / qq
                n_roots = 2
            else:
                roots[0] = 0.0
                n_roots = 1
        elif abs(qb) > _TINY:
            roots[0] = -qc / qb
            n_roots = 1
        elif abs(qc) < 1e-9:
            roots[0] = 0.0
            n_roots = 1

        if n_roots == 0:
            status[i] = STATUS_NO_ROOT
            continue

        # one Newton polish per root to pin the determinant to machine level
        for r in range(n_roots):
            t = roots[r]
            fp = 2.0 * qa * t + qb
            if abs(fp) > _TINY:
                t = t - ((qa * t + qb) * t + qc) / fp
            roots[r] = t
            cand[r, 0] = x0[0] + t * v0
            cand[r, 1] = x0[1] + t * v1
            cand[r, 2] = x0[2] + t * v2c
            cand[r, 3] = x0[3] + t * v3

        pick = -1
        if n_roots == 1:
            if rule == ROOT_RULE_PASSIVITY:
                if _candidate_passive(cand[0, 0], cand[0, 1], cand[0, 2], cand[0, 3], pass_tol):
                    pick = 0
            else:
                pick = 0
        else:
            ok0 = _candidate_passive(cand[0, 0], cand[0, 1], cand[0, 2], cand[0, 3], pass_tol)
            ok1 = _candidate_passive(cand[1, 0], cand[1, 1], cand[1, 2], cand[1, 3], pass_tol)
            if rule == ROOT_RULE_PASSIVITY:
                if ok0 and not ok1:
                    pick = 0
                elif ok1 and not ok0:
                    pick = 1
                elif ok0 and ok1:
                    if have_prev:
                        d0 = 0.0
                        d1 = 0.0
                        for k in range(4):
                            d0 += abs(cand[0, k] - prev[k]) ** 2
                            d1 += abs(cand[1, k] - prev[k]) ** 2
                        pick = 0 if d0 <= d1 else 1
                    else:
                        pick = 0 if abs(roots[0]) <= abs(roots[1]) else 1
            else:
                if have_prev:
                    d0 = 0.0
                    d1 = 0.0
                    for k in range(4):
                        d0 += abs(cand[0, k] - prev[k]) ** 2
                        d1 += abs(cand[1, k] - prev[k]) ** 2
                    pick = 0 if d0 <= d1 else 1
                elif ok0 and not ok1:
                    pick = 0
                elif ok1 and not ok0:
                    pick = 1
                else:
                    pick = 0 if abs(roots[0]) <= abs(roots[1]) else 1

        if pick < 0:
            status[i] = STATUS_BOTH_REJECTED
            continue

        av = cand[pick, 0]
        bv = cand[pick, 1]
        cv = cand[pick, 2]
        dv = cand[pick, 3]
        det_err = abs(av * dv - cv * bv - 1.0)
        if det_err > det_tol:
            status[i] = STATUS_DET_FAIL
            continue

        # relative residuals of the three linear equations
        lhs1 = av * zli + bv
        rhs1 = z1[i] * (cv * zli + dv)
        r1 = abs(lhs1 - rhs1) / (abs(lhs1) + abs(rhs1) + _TINY)
        den_h = zli * av + bv + zli * zti * cv + zti * dv
        r2 = abs(h1[i] * den_h / zli - 1.0)
        lhs3 = dv * zli + bv
        rhs3 = z2[i] * (cv * zli + av)
        r3 = abs(lhs3 - rhs3) / (abs(lhs3) + abs(rhs3) + _TINY)
        res = det_err
        if r1 > res:
            res = r1
        if r2 > res:
            res = r2
        if r3 > res:
            res = r3

        abcd[0, i] = av
        abcd[1, i] = bv
        abcd[2, i] = cv
        abcd[3, i] = dv
        residual[i] = res
        branch[i] = 0 if abs(roots[pick]) <= abs(roots[1 - pick if n_roots == 2 else pick]) else 1
        status[i] = STATUS_OK
        prev[0] = av
        prev[1] = bv
        prev[2] = cv
        prev[3] = dv
        have_prev = True

    return abcd, branch, status, residual


def _tmt_solve_numpy(h1, z1, z2, zt, zl, rule, det_tol, pass_tol, rank_tol):
    n = h1.shape[0]
    mats = np.zeros((n, 3, 4), np.complex128)
    mats[:, 0, 0] = zl
    mats[:, 0, 1] = 1.0
    mats[:, 0, 2] = -z1 * zl
    mats[:, 0, 3] = -z1
    mats[:, 1, 0] = zl
    mats[:, 1, 1] = 1.0
    mats[:, 1, 2] = zl * zt
    mats[:, 1, 3] = zt
    mats[:, 2, 0] = -z2
    mats[:, 2, 1] = 1.0
    mats[:, 2, 2] = -z2 * zl
    mats[:, 2, 3] = zl
    rhs = np.zeros((n, 3), np.complex128)
    rhs[:, 1] = zl / h1

    u_mat, sing, vh = np.linalg.svd(mats)
    degenerate = sing[:, 2] < rank_tol * sing[:, 0]
    coef = np.einsum("nij,ni->nj", u_mat.conj(), rhs) / sing
    x0 = np.einsum("nj,njk->nk", coef, vh[:, :3, :].conj())
    null = vh[:, 3, :].conj()

    qa = null[:, 0] * null[:, 3] - null[:, 2] * null[:, 1]
    qb = (x0[:, 0] * null[:, 3] + null[:, 0] * x0[:, 3]
          - x0[:, 2] * null[:, 1] - null[:, 2] * x0[:, 1])
    qc = x0[:, 0] * x0[:, 3] - x0[:, 2] * x0[:, 1] - 1.0

    abcd = np.zeros((4, n), np.complex128)
    abcd[0] = 1.0
    abcd[3] = 1.0
    branch = np.full(n, -1, np.int8)
    status = np.zeros(n, np.uint8)
    residual = np.zeros(n, np.float64)

    have_prev = False
    prev = np.zeros(4, np.complex128)
    for i in range(n):
        if degenerate[i]:
            status[i] = STATUS_DEGENERATE
            continue
        a, b, c = qa[i], qb[i], qc[i]
        roots = []
        if abs(a) > _TINY:
            sq = np.sqrt(b * b - 4.0 * a * c)
            qq = -0.5 * (b + sq) if (np.conj(b) * sq).real >= 0.0 else -0.5 * (b - sq)
            if abs(qq) > _TINY:
                roots = [qq / a, c / qq]
            else:
                roots = [0.0 + 0.0j]
        elif abs(b) > _TINY:
            roots = [-c / b]
        elif abs(c) < 1e-9:
            roots = [0.0 + 0.0j]
        if not roots:
            status[i] = STATUS_NO_ROOT
            continue

        polished = []
        cands = []
        for t in roots:
            fp = 2.0 * a * t + b
            if abs(fp) > _TINY:
                t = t - ((a * t + b) * t + c) / fp
            polished.append(t)
            cands.append(x0[i] + t * null[i])

        passive = [
            _candidate_passive_py(x[0], x[1], x[2], x[3], pass_tol) for x in cands
        ]

        pick = -1
        if len(cands) == 1:
            if rule != ROOT_RULE_PASSIVITY or passive[0]:
                pick = 0
        else:
            if rule == ROOT_RULE_PASSIVITY:
                if passive[0] and not passive[1]:
                    pick = 0
                elif passive[1] and not passive[0]:
                    pick = 1
                elif passive[0] and passive[1]:
                    if have_prev:
                        d0 = np.sum(np.abs(cands[0] - prev) ** 2)
                        d1 = np.sum(np.abs(cands[1] - prev) ** 2)
                        pick = 0 if d0 <= d1 else 1
                    else:
                        pick = 0 if abs(polished[0]) <= abs(polished[1]) else 1
            else:
                if have_prev:
                    d0 = np.sum(np.abs(cands[0] - prev) ** 2)
                    d1 = np.sum(np.abs(cands[1] - prev) ** 2)
                    pick = 0 if d0 <= d1 else 1
                elif passive[0] and not passive[1]:
                    pick = 0
                elif passive[1] and not passive[0]:
                    pick = 1
                else:
                    pick = 0 if abs(polished[0]) <= abs(polished[1]) else 1

        if pick < 0:
            status[i] = STATUS_BOTH_REJECTED
            continue

        av, bv, cv, dv = cands[pick]
        det_err = abs(av * dv - cv * bv - 1.0)
        if det_err > det_tol:
            status[i] = STATUS_DET_FAIL
            continue

        zli = zl[i]
        zti = zt[i]
        lhs1 = av * zli + bv
        rhs1 = z1[i] * (cv * zli + dv)
        r1 = abs(lhs1 - rhs1) / (abs(lhs1) + abs(rhs1) + _TINY)
        den_h = zli * av + bv + zli * zti * cv + zti * dv
        r2 = abs(h1[i] * den_h / zli - 1.0)
        lhs3 = dv * zli + bv
        rhs3 = z2[i] * (cv * zli + av)
        r3 = abs(lhs3 - rhs3) / (abs(lhs3) + abs(rhs3) + _TINY)

        abcd[:, i] = (av, bv, cv, dv)
        residual[i] = max(det_err, r1, r2, r3)
        if len(polished) == 2:
            branch[i] = 0 if abs(polished[pick]) <= abs(polished[1 - pick]) else 1
        else:
            branch[i] = 0
        status[i] = STATUS_OK
        prev = cands[pick]
        have_prev = True

    return abcd, branch, status, residual


def tmt_solve(h1, z1, z2, zt, zl, rule=ROOT_RULE_PASSIVITY,
              det_tol=1e-9, pass_tol=1e-6, rank_tol=1e-10):
    """Recover per-bin (A, B, C, D) from observed (H1, Zin1, Zin2).

    Returns ``(abcd, branch, status, residual)`` where ``abcd`` is (4, L),
    ``branch`` holds the chosen quadratic root index ordered by magnitude
    (-1 for invalid bins, which are filled with identity entries), ``status``
    carries the per-bin status codes and ``residual`` the worst relative
    equation residual of the selected solution.
    """
    h1 = np.ascontiguousarray(h1, dtype=np.complex128)
    z1 = np.ascontiguousarray(z1, dtype=np.complex128)
    z2 = np.ascontiguousarray(z2, dtype=np.complex128)
    zt = np.ascontiguousarray(zt, dtype=np.complex128)
    zl = np.ascontiguousarray(zl, dtype=np.complex128)
    if NUMBA_ENABLED:
        return _tmt_solve_numba(h1, z1, z2, zt, zl, int(rule),
                                float(det_tol), float(pass_tol), float(rank_tol))
    return _tmt_solve_numpy(h1, z1, z2, zt, zl, int(rule),
                            float(det_tol), float(pass_tol), float(rank_tol))
