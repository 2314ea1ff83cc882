# cython: language_level=3
"""Compiled replication loop.

Mirrors ``_reference.run_policy`` draw for draw: uniforms come from
``random_standard_uniform`` and posterior samples from ``random_beta`` on the
caller's bit generator, which is what ``Generator.random`` and
``Generator.beta`` call underneath.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log, sqrt, INFINITY, isnan
from libc.stdint cimport int8_t, int32_t, int64_t
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_uniform, random_beta

cdef enum:
    UCB = 0
    TS = 1
    Q_UCB = 2
    Q_TS = 3
    AA_UCB = 4
    AA_TS = 5
    AA_Q_UCB = 6
    AA_Q_TS = 7
    GENIE = 8
    UNIFORM = 9

cdef enum:
    B_INIT = 0
    B_EXPLORE = 1
    B_EXPLOIT = 2


cdef inline int argmax(const double* v, int K) noexcept nogil:
    cdef int k, arg = 0
    cdef double best = -INFINITY
    for k in range(K):
        if v[k] > best:
            best = v[k]
            arg = k
    return arg


cdef inline int greedy(const int64_t* n, const int64_t* s, double* tmp, int K) noexcept nogil:
    # argmax mu_hat, exact ties to the larger posterior mean, then lowest index
    cdef int k, arg = 0
    cdef double m, pm, best = -1.0, best_pm = -1.0
    for k in range(K):
        m = (<double>s[k]) / n[k] if n[k] > 0 else 0.0
        pm = (s[k] + 1.0) / (n[k] + 2.0)
        if m > best or (m == best and pm > best_pm):
            best = m
            best_pm = pm
            arg = k
    return arg


cdef inline int ucb_pick(const int64_t* n, const int64_t* s, double* tmp, int K,
                         long t, bint q_index) noexcept nogil:
    cdef int k
    cdef double lt = log(<double>t)
    for k in range(K):
        if n[k] == 0:
            tmp[k] = INFINITY
        elif q_index:
            tmp[k] = (<double>s[k]) / n[k] + sqrt(lt * lt / (2.0 * n[k]))
        else:
            tmp[k] = (<double>s[k]) / n[k] + sqrt(8.0 * lt / n[k])
    return argmax(tmp, K)


cdef inline int ts_pick(const int64_t* n, const int64_t* s, double* tmp, int K,
                        bitgen_t* rng) noexcept nogil:
    cdef int k
    for k in range(K):
        tmp[k] = random_beta(rng, <double>(s[k] + 1), <double>(n[k] - s[k] + 1))
    return argmax(tmp, K)


cdef inline double limit_of(const int64_t* n, const int64_t* s, int K) noexcept nogil:
    cdef int k
    cdef double a, b, best = INFINITY, v
    for k in range(K):
        a = <double>(s[k] + 1)
        b = <double>(n[k] - s[k] + 1)
        v = (a + b) / a
        if v < best:
            best = v
    return best


cdef inline double gate_prob(int K, long t) noexcept nogil:
    cdef double lt = log(<double>t)
    cdef double p = 3.0 * K * lt * lt / t
    return 1.0 if p > 1.0 else p


cdef inline int uniform_channel(bitgen_t* rng, int K) noexcept nogil:
    cdef int k = <int>(random_standard_uniform(rng) * K)
    return K - 1 if k > K - 1 else k


cdef void simulate(int code, const double* mu, int K, int k_star, const double* u,
                   bint coupled, long T, int64_t age0, bitgen_t* rng, double thr,
                   double limit_override, int32_t* chosen, int64_t* aoi, int8_t* branch,
                   int64_t* n, int64_t* s, double* tmp) noexcept nogil:
    cdef long i, t
    cdef int ch = 0, br = B_EXPLOIT, k
    cdef int64_t age = age0
    cdef double lim, draw
    cdef bint gate, ok
    for k in range(K):
        n[k] = 0
        s[k] = 0
    for i in range(T):
        t = i + 1
        aoi[i] = age
        if code == UCB or code == AA_UCB or code == AA_Q_UCB:
            if t <= K:
                ch = <int>(t - 1)
                br = B_INIT
            elif code == UCB:
                ch = ucb_pick(n, s, tmp, K, t, False)
                br = B_EXPLOIT
            elif code == AA_UCB:
                lim = limit_of(n, s, K) if isnan(limit_override) else limit_override
                if age > lim:
                    ch = greedy(n, s, tmp, K)
                    br = B_EXPLOIT
                else:
                    ch = ucb_pick(n, s, tmp, K, t, False)
                    br = B_EXPLORE
            else:
                gate = random_standard_uniform(rng) < gate_prob(K, t)
                if gate and age < thr:
                    ch = uniform_channel(rng, K)
                    br = B_EXPLORE
                else:
                    ch = ucb_pick(n, s, tmp, K, t, True)
                    br = B_EXPLOIT
        elif code == TS:
            ch = ts_pick(n, s, tmp, K, rng)
            br = B_EXPLOIT
        elif code == Q_UCB or code == Q_TS:
            if random_standard_uniform(rng) < gate_prob(K, t):
                ch = uniform_channel(rng, K)
                br = B_EXPLORE
            else:
                ch = ucb_pick(n, s, tmp, K, t, True) if code == Q_UCB else ts_pick(n, s, tmp, K, rng)
                br = B_EXPLOIT
        elif code == AA_TS:
            lim = limit_of(n, s, K) if isnan(limit_override) else limit_override
            if age > lim:
                ch = greedy(n, s, tmp, K)
                br = B_EXPLOIT
            else:
                ch = ts_pick(n, s, tmp, K, rng)
                br = B_EXPLORE
        elif code == AA_Q_TS:
            gate = random_standard_uniform(rng) < gate_prob(K, t)
            if gate and age < thr:
                ch = uniform_channel(rng, K)
                br = B_EXPLORE
            else:
                ch = ts_pick(n, s, tmp, K, rng)
                br = B_EXPLOIT
        elif code == GENIE:
            ch = k_star
            br = B_EXPLOIT
        else:
            ch = uniform_channel(rng, K)
            br = B_EXPLORE
        draw = u[i] if coupled else u[i * K + ch]
        ok = draw <= mu[ch]
        n[ch] += 1
        if ok:
            s[ch] += 1
            age = 1
        else:
            age += 1
        chosen[i] = ch
        branch[i] = br


def run_policy(int code, double[::1] mu, int k_star, double[::1] u_flat, bint coupled,
               long T, long age0, object bit_generator, double thr, double limit_override):
    """Run one policy over ``T`` slots; returns ``(chosen, aoi, branch)``."""
    cdef int K = mu.shape[0]
    if coupled and u_flat.shape[0] != T:
        raise ValueError("coupled draws must have length T")
    if not coupled and u_flat.shape[0] != T * K:
        raise ValueError("independent draws must have length T*K")
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator")
    cdef bitgen_t* rng = <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")
    chosen = np.empty(T, dtype=np.int32)
    aoi = np.empty(T, dtype=np.int64)
    branch = np.empty(T, dtype=np.int8)
    cdef int32_t[::1] c_v = chosen
    cdef int64_t[::1] a_v = aoi
    cdef int8_t[::1] b_v = branch
    cdef int64_t* n = <int64_t*> malloc(K * sizeof(int64_t))
    cdef int64_t* s = <int64_t*> malloc(K * sizeof(int64_t))
    cdef double* tmp = <double*> malloc(K * sizeof(double))
    if n == NULL or s == NULL or tmp == NULL:
        free(n); free(s); free(tmp)
        raise MemoryError()
    try:
        with bit_generator.lock, nogil:
            simulate(code, &mu[0], K, k_star, &u_flat[0], coupled, T, age0, rng, thr,
                     limit_override, &c_v[0], &a_v[0], &b_v[0], n, s, tmp)
    finally:
        free(n); free(s); free(tmp)
    return chosen, aoi, branch
