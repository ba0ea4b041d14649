"""Pure-Python union-find over bucketed boxes.

Mirrors ``_kernels.pyx`` line for line.  Also used whenever coordinates do not
fit in int64, since it works on arbitrary-precision Python ints.
"""


def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return 0
    if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return 1


def _close(lo_i, hi_i, lo_j, hi_j, thresh, d):
    # per-coordinate gap between closed boxes <= thresh in every coordinate
    for k in range(d):
        g = lo_j[k] - hi_i[k]
        g2 = lo_i[k] - hi_j[k]
        if g2 > g:
            g = g2
        if g > thresh[k]:
            return False
    return True


def union_cells(lo, hi, thresh, order, start, stop, cell_lo, cell_hi, pairs, auto_same, parent, size):
    """Union every pair of boxes whose per-coordinate gaps are all <= ``thresh``.

    Only boxes in the listed cell pairs are compared.  Self pairs must precede
    cross pairs.  With ``auto_same`` every box in a cell is taken as adjacent to
    every other box in that cell.  ``parent`` and ``size`` are updated in place;
    returns the number of merges.
    """
    lo = [tuple(r) for r in lo]
    hi = [tuple(r) for r in hi]
    thresh = tuple(thresh)
    order = list(order)
    start = list(start)
    stop = list(stop)
    cell_lo = [tuple(r) for r in cell_lo]
    cell_hi = [tuple(r) for r in cell_hi]
    par = [int(x) for x in parent]
    sz = [int(x) for x in size]
    d = len(thresh)
    merges = 0
    for a, b in pairs:
        a = int(a)
        b = int(b)
        sa, ea = start[a], stop[a]
        if a == b:
            if auto_same:
                first = order[sa]
                for p in range(sa + 1, ea):
                    merges += _union(par, sz, first, order[p])
                continue
            for p in range(sa, ea):
                i = order[p]
                for q in range(p + 1, ea):
                    j = order[q]
                    if _find(par, i) != _find(par, j) and _close(lo[i], hi[i], lo[j], hi[j], thresh, d):
                        merges += _union(par, sz, i, j)
            continue
        if not _close(cell_lo[a], cell_hi[a], cell_lo[b], cell_hi[b], thresh, d):
            continue
        sb, eb = start[b], stop[b]
        for p in range(sa, ea):
            i = order[p]
            if not _close(lo[i], hi[i], cell_lo[b], cell_hi[b], thresh, d):
                continue
            for q in range(sb, eb):
                j = order[q]
                if _find(par, i) == _find(par, j):
                    if auto_same:
                        break
                    continue
                if _close(lo[i], hi[i], lo[j], hi[j], thresh, d):
                    merges += _union(par, sz, i, j)
                    if auto_same:
                        break
    parent[:] = par
    size[:] = sz
    return merges
