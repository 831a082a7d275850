"""Hot numeric kernels, written once and compiled two ways.

`make_kernels(jit)` builds the full kernel set with the given decorator:
`numba.njit` for the fast path, or the identity for the pure numpy/python
fallback (see `mjq.backends`). Both paths execute the same statements in
the same order, so results are bit-identical across backends and worker
counts.

Randomness is counter-based: every draw is a pure function of
(seed, replica, job_index, substream, counter), which gives random access
into the mark sequence. The backward doubling scheme and the forward /
event-list simulators therefore share one stream without storing it.
"""

import math
from types import SimpleNamespace

import numpy as np

U64 = np.uint64

_M1 = U64(0xFF51AFD7ED558CCD)
_M2 = U64(0xC4CEB9FE1A85EC53)
_S33 = U64(33)
_S11 = U64(11)
_C_REP = U64(0x9E3779B97F4A7C15)
_C_JOB = U64(0xBF58476D1CE4E5B9)
_C_SUB = U64(0x94D049BB133111EB)
_C_CTR = U64(0xD6E8FEB86659FD93)
_INV53 = 2.0 ** -53

# substream tags
SUB_CLASS = 0
SUB_SERVICE = 1
SUB_ARRIVAL = 2
SUB_SUBSET = 3

# distribution kind codes (shared with mjq.randomness)
KIND_DET = 0
KIND_EXP = 1
KIND_ERLANG = 2
KIND_HYPER2 = 3
KIND_BPARETO = 4


def make_kernels(jit):
    @jit
    def _mix(z):
        z = (z ^ (z >> _S33)) * _M1
        z = (z ^ (z >> _S33)) * _M2
        return z ^ (z >> _S33)

    @jit
    def uniform(seed, replica, job, sub, ctr):
        """Deterministic draw in [0, 1) addressed by its counters."""
        z = _mix(U64(seed) ^ (U64(replica) * _C_REP))
        z = _mix(z ^ (U64(job) * _C_JOB))
        z = _mix(z ^ (U64(sub) * _C_SUB))
        z = _mix(z ^ (U64(ctr) * _C_CTR))
        return float(z >> _S11) * _INV53

    @jit
    def draw_dist(kind, p0, p1, p2, seed, replica, job, sub):
        if kind == KIND_DET:
            return p0
        if kind == KIND_EXP:
            u = uniform(seed, replica, job, sub, 0)
            return -p0 * math.log1p(-u)
        if kind == KIND_ERLANG:
            k = int(p0 + 0.5)
            phase_mean = p1 / k
            tot = 0.0
            for i in range(k):
                u = uniform(seed, replica, job, sub, i)
                tot += -phase_mean * math.log1p(-u)
            return tot
        if kind == KIND_HYPER2:
            u0 = uniform(seed, replica, job, sub, 0)
            u1 = uniform(seed, replica, job, sub, 1)
            mean = p0 if u0 < p2 else p1
            return -mean * math.log1p(-u1)
        # bounded Pareto via inverse CDF on the truncated support
        u = uniform(seed, replica, job, sub, 0)
        ratio = math.pow(p0 / p1, p2)
        return p0 / math.pow(1.0 - u * (1.0 - ratio), 1.0 / p2)

    @jit
    def class_index(seed, replica, job, cum):
        u = uniform(seed, replica, job, SUB_CLASS, 0)
        c = 0
        while c < cum.shape[0] - 1 and u >= cum[c]:
            c += 1
        return c

    @jit
    def sample_mark(seed, replica, job, cum, calphas, kinds, params,
                    akind, aparams):
        c = class_index(seed, replica, job, cum)
        sigma = draw_dist(kinds[c], params[c, 0], params[c, 1], params[c, 2],
                          seed, replica, job, SUB_SERVICE)
        tau = draw_dist(akind, aparams[0], aparams[1], aparams[2],
                        seed, replica, job, SUB_ARRIVAL)
        return calphas[c], sigma, tau

    @jit
    def gen_marks(seed, replica, lo, hi, cum, calphas, kinds, params,
                  akind, aparams):
        n = hi - lo
        alphas = np.empty(n, dtype=np.int64)
        sigmas = np.empty(n, dtype=np.float64)
        taus = np.empty(n, dtype=np.float64)
        for i in range(n):
            a, sg, t = sample_mark(seed, replica, lo + i, cum, calphas,
                                   kinds, params, akind, aparams)
            alphas[i] = a
            sigmas[i] = sg
            taus[i] = t
        return alphas, sigmas, taus

    @jit
    def step_into(w, alpha, sigma, tau, out):
        """One recurrence update: sync, load, elapse, clamp, reorder.

        `w` must be sorted ascending; writes the sorted successor into
        `out`. The first `alpha` components all become
        (w[alpha-1] + sigma - tau)^+ and are merged with the aged tail,
        so no full sort is needed.
        """
        s = w.shape[0]
        v = w[alpha - 1] + sigma - tau
        if v < 0.0:
            v = 0.0
        k = 0
        i = alpha
        while i < s:
            x = w[i] - tau
            if x < 0.0:
                x = 0.0
            if x < v:
                out[k] = x
                k += 1
                i += 1
            else:
                break
        for _ in range(alpha):
            out[k] = v
            k += 1
        while i < s:
            x = w[i] - tau
            if x < 0.0:
                x = 0.0
            out[k] = x
            k += 1
            i += 1

    @jit
    def window(seed, replica, n_hi, n_lo, w_init, cum, calphas, kinds,
               params, akind, aparams):
        """Workload at the arrival of job -n_lo, starting from w_init at
        the arrival of job -n_hi (marks n_hi down to n_lo+1)."""
        a = w_init.copy()
        b = np.empty_like(a)
        for j in range(n_hi, n_lo, -1):
            alpha, sigma, tau = sample_mark(seed, replica, j, cum, calphas,
                                            kinds, params, akind, aparams)
            step_into(a, alpha, sigma, tau, b)
            t = a
            a = b
            b = t
        return a

    @jit
    def sps_range(seed, rep_lo, rep_hi, ell0, ell_max, cum, calphas, kinds,
                  params, akind, aparams, out_w, out_ell, out_doub, out_conv):
        """Backward sub-perfect sampling with doubling, for a contiguous
        replica range. Replica r lands at row r - rep_lo; streams depend
        only on the absolute replica index, so chunking cannot change
        the output."""
        s = out_w.shape[1]
        zero = np.zeros(s, dtype=np.float64)
        for replica in range(rep_lo, rep_hi):
            ell = ell0
            m_prev = window(seed, replica, ell, 0, zero, cum, calphas,
                            kinds, params, akind, aparams)
            doublings = 0
            converged = False
            while 2 * ell <= ell_max:
                ell2 = 2 * ell
                m_new = window(seed, replica, ell2, 0, zero, cum, calphas,
                               kinds, params, akind, aparams)
                doublings += 1
                same = True
                for i in range(s):
                    if m_new[i] != m_prev[i]:
                        same = False
                        break
                m_prev = m_new
                ell = ell2
                if same:
                    converged = True
                    break
            row = replica - rep_lo
            for i in range(s):
                out_w[row, i] = m_prev[i]
            out_ell[row] = ell
            out_doub[row] = doublings
            out_conv[row] = converged

    @jit
    def forward(seed, replica, n_jobs, w0, cum, calphas, kinds, params,
                akind, aparams, record):
        """Iterate the recurrence forward over jobs 0..n_jobs-1, recording
        each job's waiting time before its own mark is applied."""
        s = w0.shape[0]
        a = w0.copy()
        b = np.empty_like(a)
        waits = np.empty(n_jobs, dtype=np.float64)
        alphas = np.empty(n_jobs, dtype=np.int64)
        sigmas = np.empty(n_jobs, dtype=np.float64)
        taus = np.empty(n_jobs, dtype=np.float64)
        if record:
            wl = np.empty((n_jobs, s), dtype=np.float64)
        else:
            wl = np.empty((0, s), dtype=np.float64)
        for n in range(n_jobs):
            alpha, sigma, tau = sample_mark(seed, replica, n, cum, calphas,
                                            kinds, params, akind, aparams)
            waits[n] = a[alpha - 1]
            alphas[n] = alpha
            sigmas[n] = sigma
            taus[n] = tau
            step_into(a, alpha, sigma, tau, b)
            t = a
            a = b
            b = t
            if record:
                for i in range(s):
                    wl[n, i] = a[i]
        return waits, alphas, sigmas, taus, a, wl

    @jit
    def pile_run(seed, replica, values, offset, n_start, n_target,
                 renorm_period, cum, calphas, kinds, params):
        """Advance the saturated pile over jobs n_start+1..n_target.

        Consumes only class and service substreams; inter-arrival draws
        are structurally untouched. `values` is updated in place (sorted,
        shifted); returns the new offset."""
        s = values.shape[0]
        for n in range(n_start + 1, n_target + 1):
            c = class_index(seed, replica, n, cum)
            alpha = calphas[c]
            sigma = draw_dist(kinds[c], params[c, 0], params[c, 1],
                              params[c, 2], seed, replica, n, SUB_SERVICE)
            v = values[alpha - 1] + sigma
            k = 0
            i = alpha
            while i < s and values[i] < v:
                values[k] = values[i]
                k += 1
                i += 1
            for j in range(k, i):
                values[j] = v
            if n % renorm_period == 0:
                shift = values[0]
                for i in range(s):
                    values[i] -= shift
                offset += shift
        return offset

    @jit
    def ra_pile_run(seed, replica, values, perm, offset, n_start, n_target,
                    renorm_period, cum, calphas, kinds, params):
        """Saturated pile under random server assignment.

        `values` is identity-indexed (no reordering); `perm` is scratch
        space for the per-job uniform subset draw (partial shuffle from
        the identity, matching the reference step)."""
        s = values.shape[0]
        for n in range(n_start + 1, n_target + 1):
            for i in range(s):
                perm[i] = i
            c = class_index(seed, replica, n, cum)
            alpha = calphas[c]
            sigma = draw_dist(kinds[c], params[c, 0], params[c, 1],
                              params[c, 2], seed, replica, n, SUB_SERVICE)
            m = -1.0
            for t in range(alpha):
                u = uniform(seed, replica, n, SUB_SUBSET, t)
                j = t + int(u * (s - t))
                tmp = perm[t]
                perm[t] = perm[j]
                perm[j] = tmp
                if values[perm[t]] > m:
                    m = values[perm[t]]
            nv = m + sigma
            for t in range(alpha):
                values[perm[t]] = nv
            if n % renorm_period == 0:
                shift = values[0]
                for i in range(1, s):
                    if values[i] < shift:
                        shift = values[i]
                for i in range(s):
                    values[i] -= shift
                offset += shift
        return offset

    @jit
    def cycle_sups(seed, replica, cycles, start_index, gclass, s, cum,
                   calphas, kinds, params):
        """Sup-norm of the pile over regeneration cycles that open with a
        global job and end just before the next one. Returns the sups and
        the next unconsumed job index."""
        values = np.empty(s, dtype=np.float64)
        sups = np.empty(cycles, dtype=np.float64)
        n = start_index
        for cyc in range(cycles):
            sig = draw_dist(kinds[gclass], params[gclass, 0],
                            params[gclass, 1], params[gclass, 2],
                            seed, replica, n, SUB_SERVICE)
            for i in range(s):
                values[i] = sig
            n += 1
            while True:
                c = class_index(seed, replica, n, cum)
                if c == gclass:
                    sups[cyc] = values[s - 1]
                    break
                alpha = calphas[c]
                sigma = draw_dist(kinds[c], params[c, 0], params[c, 1],
                                  params[c, 2], seed, replica, n,
                                  SUB_SERVICE)
                v = values[alpha - 1] + sigma
                k = 0
                i = alpha
                while i < s and values[i] < v:
                    values[k] = values[i]
                    k += 1
                    i += 1
                for j in range(k, i):
                    values[j] = v
                n += 1
        return sups, n

    return SimpleNamespace(
        uniform=uniform,
        draw_dist=draw_dist,
        class_index=class_index,
        sample_mark=sample_mark,
        gen_marks=gen_marks,
        step_into=step_into,
        window=window,
        sps_range=sps_range,
        forward=forward,
        pile_run=pile_run,
        ra_pile_run=ra_pile_run,
        cycle_sups=cycle_sups,
    )
