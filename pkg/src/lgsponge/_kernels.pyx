# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled union-find over bucketed boxes (int64 coordinates).

Same algorithm as ``_kernels_py.union_cells``.
"""

from libc.stdint cimport int64_t


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    cdef Py_ssize_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef inline int _union(Py_ssize_t[::1] parent, Py_ssize_t[::1] size,
                       Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t ra = _find(parent, a), rb = _find(parent, b), tmp
    if ra == rb:
        return 0
    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
        tmp = ra
        ra = rb
        rb = tmp
    parent[rb] = ra
    size[ra] += size[rb]
    return 1


cdef inline bint _close(const int64_t[:, ::1] lo_a, const int64_t[:, ::1] hi_a, Py_ssize_t i,
                        const int64_t[:, ::1] lo_b, const int64_t[:, ::1] hi_b, Py_ssize_t j,
                        const int64_t[::1] thresh, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t k
    cdef int64_t g, g2
    for k in range(d):
        g = lo_b[j, k] - hi_a[i, k]
        g2 = lo_a[i, k] - hi_b[j, k]
        if g2 > g:
            g = g2
        if g > thresh[k]:
            return False
    return True


def union_cells(const int64_t[:, ::1] lo, const int64_t[:, ::1] hi, const int64_t[::1] thresh,
                const Py_ssize_t[::1] order, const Py_ssize_t[::1] start, const Py_ssize_t[::1] stop,
                const int64_t[:, ::1] cell_lo, const int64_t[:, ::1] cell_hi,
                const Py_ssize_t[:, ::1] pairs, bint auto_same,
                Py_ssize_t[::1] parent, Py_ssize_t[::1] size):
    cdef Py_ssize_t d = thresh.shape[0]
    cdef Py_ssize_t m = pairs.shape[0]
    cdef Py_ssize_t t, a, b, p, q, i, j, sa, ea, sb, eb, first
    cdef long merges = 0
    with nogil:
        for t in range(m):
            a = pairs[t, 0]
            b = pairs[t, 1]
            sa = start[a]
            ea = stop[a]
            if a == b:
                if auto_same:
                    first = order[sa]
                    for p in range(sa + 1, ea):
                        merges += _union(parent, size, first, order[p])
                    continue
                for p in range(sa, ea):
                    i = order[p]
                    for q in range(p + 1, ea):
                        j = order[q]
                        if _find(parent, i) != _find(parent, j) and _close(lo, hi, i, lo, hi, j, thresh, d):
                            merges += _union(parent, size, i, j)
                continue
            if not _close(cell_lo, cell_hi, a, cell_lo, cell_hi, b, thresh, d):
                continue
            sb = start[b]
            eb = stop[b]
            for p in range(sa, ea):
                i = order[p]
                if not _close(lo, hi, i, cell_lo, cell_hi, b, thresh, d):
                    continue
                for q in range(sb, eb):
                    j = order[q]
                    if _find(parent, i) == _find(parent, j):
                        if auto_same:
                            break
                        continue
                    if _close(lo, hi, i, lo, hi, j, thresh, d):
                        merges += _union(parent, size, i, j)
                        if auto_same:
                            break
    return merges
