# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled contraction kernels for batched Fock-space amplitude tensors.

Every kernel takes ``states`` as a C-contiguous ``(B, S)`` complex128 array,
where each row is a flattened ``D**n`` tensor (mode 0 slowest), and returns a
fresh array of the same shape.  Gate entries that are exactly zero are
skipped, so block-structured gates (squeeze parity blocks, beamsplitter
number blocks) cost only their nonzeros.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _mode_last(const double* ut, const double* src, double* dst,
                     Py_ssize_t nvec, Py_ssize_t dim) noexcept nogil:
    # out[x, :] = sum_j src[x, j] * ut[j, :] with ut the transposed gate; dst zeroed
    cdef Py_ssize_t x, i, j
    cdef double sr, si, gr, gi
    cdef const double* g
    cdef double* d
    for x in range(nvec):
        d = dst + 2 * x * dim
        for j in range(dim):
            sr = src[2 * (x * dim + j)]
            si = src[2 * (x * dim + j) + 1]
            g = ut + 2 * j * dim
            for i in range(dim):
                gr = g[2 * i]
                gi = g[2 * i + 1]
                d[2 * i] += gr * sr - gi * si
                d[2 * i + 1] += gr * si + gi * sr


cdef void _mode_inner(const double* u, const double* src, double* dst,
                      Py_ssize_t nvec, Py_ssize_t dim, Py_ssize_t inner) noexcept nogil:
    # out[x, i, r] = sum_j u[i, j] src[x, j, r]; dst must be zeroed
    cdef Py_ssize_t x, i, j, r, block = dim * inner
    cdef double gr, gi, sr, si
    cdef const double* s
    cdef double* d
    for x in range(nvec):
        for i in range(dim):
            d = dst + 2 * (x * block + i * inner)
            for j in range(dim):
                gr = u[2 * (i * dim + j)]
                gi = u[2 * (i * dim + j) + 1]
                if gr == 0.0 and gi == 0.0:
                    continue
                s = src + 2 * (x * block + j * inner)
                for r in range(inner):
                    sr = s[2 * r]
                    si = s[2 * r + 1]
                    d[2 * r] += gr * sr - gi * si
                    d[2 * r + 1] += gr * si + gi * sr


def apply_mode(cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] gate,
               cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] states,
               Py_ssize_t outer, Py_ssize_t dim, Py_ssize_t inner):
    """Contract a ``(dim, dim)`` gate against the middle axis of ``(B, outer, dim, inner)``."""
    cdef Py_ssize_t nvec = states.shape[0] * outer
    out = np.zeros((states.shape[0], states.shape[1]), dtype=np.complex128)
    if inner == 1:
        gate = np.ascontiguousarray(gate.T)
    cdef const double* u = <const double*> cnp.PyArray_DATA(gate)
    cdef const double* src = <const double*> cnp.PyArray_DATA(states)
    cdef double* dst = <double*> cnp.PyArray_DATA(out)
    with nogil:
        if inner == 1:
            _mode_last(u, src, dst, nvec, dim)
        else:
            _mode_inner(u, src, dst, nvec, dim, inner)
    return out


def apply_diag(cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] diag,
               cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] states,
               Py_ssize_t outer, Py_ssize_t dim, Py_ssize_t inner):
    """Multiply the middle axis of ``(B, outer, dim, inner)`` by ``diag``."""
    cdef Py_ssize_t nvec = states.shape[0] * outer
    cdef Py_ssize_t x, i, r, k
    cdef double gr, gi, sr, si
    out = np.empty((states.shape[0], states.shape[1]), dtype=np.complex128)
    cdef const double* g = <const double*> cnp.PyArray_DATA(diag)
    cdef const double* src = <const double*> cnp.PyArray_DATA(states)
    cdef double* dst = <double*> cnp.PyArray_DATA(out)
    with nogil:
        for x in range(nvec):
            for i in range(dim):
                gr = g[2 * i]
                gi = g[2 * i + 1]
                k = 2 * ((x * dim + i) * inner)
                for r in range(inner):
                    sr = src[k + 2 * r]
                    si = src[k + 2 * r + 1]
                    dst[k + 2 * r] = gr * sr - gi * si
                    dst[k + 2 * r + 1] = gr * si + gi * sr
    return out


def apply_sparse(cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] vals,
                 cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] indptr,
                 cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] row_off,
                 cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] col_off,
                 cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] bases,
                 cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] states,
                 Py_ssize_t inner):
    """Apply a gate stored in CSR form with precomputed tensor offsets.

    Gate row ``i`` owns nonzeros ``indptr[i]:indptr[i+1]``; row ``i`` lands at
    tensor offset ``row_off[i]`` and nonzero ``k`` reads from ``col_off[k]``.
    For each row ``b``, base offset ``q`` and ``r`` in ``range(inner)``:
    ``out[b, q + row_off[i] + r] = sum_k vals[k] * states[b, q + col_off[k] + r]``.
    """
    cdef Py_ssize_t nrows = states.shape[0], width = states.shape[1]
    cdef Py_ssize_t ngate = indptr.shape[0] - 1, nbase = bases.shape[0]
    cdef Py_ssize_t b, q, i, k, r, base, co
    cdef double gr, gi, sr, si, ar, ai
    out = np.zeros((nrows, width), dtype=np.complex128)
    cdef const double* v = <const double*> cnp.PyArray_DATA(vals)
    cdef const Py_ssize_t* ptr = <const Py_ssize_t*> cnp.PyArray_DATA(indptr)
    cdef const Py_ssize_t* rof = <const Py_ssize_t*> cnp.PyArray_DATA(row_off)
    cdef const Py_ssize_t* cof = <const Py_ssize_t*> cnp.PyArray_DATA(col_off)
    cdef const Py_ssize_t* bs = <const Py_ssize_t*> cnp.PyArray_DATA(bases)
    cdef const double* src = <const double*> cnp.PyArray_DATA(states)
    cdef double* dst = <double*> cnp.PyArray_DATA(out)
    with nogil:
        for b in range(nrows):
            for q in range(nbase):
                base = b * width + bs[q]
                for i in range(ngate):
                    for r in range(inner):
                        ar = 0.0
                        ai = 0.0
                        for k in range(ptr[i], ptr[i + 1]):
                            gr = v[2 * k]
                            gi = v[2 * k + 1]
                            co = 2 * (base + cof[k] + r)
                            sr = src[co]
                            si = src[co + 1]
                            ar = ar + gr * sr - gi * si
                            ai = ai + gr * si + gi * sr
                        dst[2 * (base + rof[i] + r)] = ar
                        dst[2 * (base + rof[i] + r) + 1] = ai
    return out
