# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""CKY chart fill over per-span label scores.

Must stay numerically identical to the pure-Python fallback: first maximum
wins both argmaxes (smallest label id, smallest split k), and the combined
score associates as label_score + (left + right).
"""


def fill_chart(double[:, :, ::1] values, double[:, ::1] bc,
               long[:, ::1] bestlab, long[:, ::1] split):
    cdef Py_ssize_t n = values.shape[0] - 1
    cdef Py_ssize_t L = values.shape[2]
    cdef Py_ssize_t length, i, j, k, l, arg, bk
    cdef double best, v, cand

    with nogil:
        for length in range(1, n + 1):
            for i in range(0, n - length + 1):
                j = i + length
                arg = 0
                best = values[i, j, 0]
                for l in range(1, L):
                    v = values[i, j, l]
                    if v > best:
                        best = v
                        arg = l
                bestlab[i, j] = arg
                if length == 1:
                    bc[i, j] = best
                else:
                    bk = i + 1
                    cand = bc[i, i + 1] + bc[i + 1, j]
                    for k in range(i + 2, j):
                        v = bc[i, k] + bc[k, j]
                        if v > cand:
                            cand = v
                            bk = k
                    bc[i, j] = best + cand
                    split[i, j] = bk
