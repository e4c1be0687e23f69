# cython: language_level=3
"""Compiled edit-distance kernels over int id sequences.

Same contract as editdist_py; see that module for the canonical
tie-breaking rules. Operands are int32 buffers (numpy arrays work).
"""

from libc.stdlib cimport free, malloc

OP_MATCH = 0
OP_SUB = 1
OP_DEL = 2
OP_INS = 3


cdef inline int _imin3(int x, int y, int z):
    cdef int m = x
    if y < m:
        m = y
    if z < m:
        m = z
    return m


cdef int* _suffix_table(const int[:] a, const int[:] b) except NULL:
    cdef int la = a.shape[0]
    cdef int lb = b.shape[0]
    cdef int w = lb + 1
    cdef int i, j, sub
    cdef int* d = <int*> malloc(sizeof(int) * (la + 1) * w)
    if d == NULL:
        raise MemoryError()
    d[la * w + lb] = 0
    for i in range(la - 1, -1, -1):
        d[i * w + lb] = la - i
    for j in range(lb - 1, -1, -1):
        d[la * w + j] = lb - j
    for i in range(la - 1, -1, -1):
        for j in range(lb - 1, -1, -1):
            sub = d[(i + 1) * w + j + 1]
            if a[i] != b[j]:
                sub += 1
            d[i * w + j] = _imin3(sub, d[(i + 1) * w + j] + 1, d[i * w + j + 1] + 1)
    return d


def edit_cost(const int[:] a, const int[:] b):
    """Minimal unit-cost edit distance between two id sequences."""
    cdef int* d = _suffix_table(a, b)
    cdef int cost = d[0]
    free(d)
    return cost


def edit_script(const int[:] a, const int[:] b):
    """Return (cost, ops bytes) for the canonical minimal edit script."""
    cdef int la = a.shape[0]
    cdef int lb = b.shape[0]
    cdef int w = lb + 1
    cdef int i = 0, j = 0, k = 0, diag
    cdef int* d = _suffix_table(a, b)
    cdef int cost = d[0]
    cdef char* ops = <char*> malloc(la + lb + 1)
    if ops == NULL:
        free(d)
        raise MemoryError()
    try:
        while i < la or j < lb:
            if i < la and j < lb:
                diag = d[(i + 1) * w + j + 1]
                if a[i] != b[j]:
                    diag += 1
                if d[i * w + j] == diag:
                    ops[k] = OP_MATCH if a[i] == b[j] else OP_SUB
                    i += 1
                    j += 1
                    k += 1
                    continue
            if i < la and d[i * w + j] == d[(i + 1) * w + j] + 1:
                ops[k] = OP_DEL
                i += 1
            else:
                ops[k] = OP_INS
                j += 1
            k += 1
        return cost, (<bytes> ops[:k])
    finally:
        free(ops)
        free(d)
