"""Spatial-hash connectivity of axis-aligned integer boxes.

The pairwise union-find loop runs in the compiled ``_kernels`` extension when
it is importable and the coordinates fit in int64.  Otherwise it falls back to
``_kernels_py``.  Set ``LGSPONGE_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import itertools
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("LGSPONGE_PURE_PYTHON"):
        raise ImportError("pure-python backend forced")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

_INT64_SAFE = 1 << 62


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def fits_int64(*arrays) -> bool:
    for a in arrays:
        a = np.asarray(a)
        if a.size == 0:
            continue
        if a.dtype == object:
            if max(abs(int(x)) for x in a.ravel()) >= _INT64_SAFE:
                return False
        elif a.dtype.kind not in "iu":
            return False
    return True


def _as_int(a, exact64: bool):
    return np.ascontiguousarray(a, dtype=np.int64) if exact64 else np.asarray(a, dtype=object)


def box_components(lo, hi, thresh, backend: str | None = None) -> np.ndarray:
    """Label boxes ``[lo, hi]`` linked when every coordinate gap is <= ``thresh``.

    Returns, for each box, the smallest index in its component.  The result
    does not depend on the backend or on evaluation order.
    """
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    n = lo.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    d = lo.shape[1]
    thresh = [int(t) for t in thresh]
    exact64 = fits_int64(lo, hi, np.array(thresh, dtype=object))
    lo = _as_int(lo, exact64)
    hi = _as_int(hi, exact64)

    wmax = [int(x) for x in (hi - lo).max(axis=0)]
    cell = [max(t, w, 1) for t, w in zip(thresh, wmax)]
    auto_same = all(c <= t for c, t in zip(cell, thresh))
    reach = [-(-(t + w) // c) for t, w, c in zip(thresh, wmax, cell)]

    cell_arr = np.array(cell, dtype=lo.dtype)
    coords = lo // cell_arr
    coords = coords - coords.min(axis=0)
    spans = [int(s) + 2 * r + 1 for s, r in zip(coords.max(axis=0), reach)]
    strides = []
    acc = 1
    for s in reversed(spans):
        strides.append(acc)
        acc *= s
    strides = strides[::-1]
    key_dtype = np.int64 if acc < _INT64_SAFE else object
    shifted = (coords + np.array(reach, dtype=lo.dtype)).astype(key_dtype)
    keys = (shifted * np.array(strides, dtype=key_dtype)).sum(axis=1)

    order = np.argsort(keys, kind="stable")
    skeys = keys[order]
    first = np.ones(n, dtype=bool)
    first[1:] = skeys[1:] != skeys[:-1]
    starts = np.flatnonzero(first)
    stops = np.append(starts[1:], n)
    ukeys = skeys[starts]
    ncell = len(ukeys)

    cell_lo = np.minimum.reduceat(lo[order], starts, axis=0)
    cell_hi = np.maximum.reduceat(hi[order], starts, axis=0)

    pair_blocks = [np.stack([np.arange(ncell), np.arange(ncell)], axis=1)]
    for off in itertools.product(*[range(-r, r + 1) for r in reach]):
        if not any(off) or next(x for x in off if x) < 0:
            continue
        delta = sum(o * s for o, s in zip(off, strides))
        target = ukeys + delta
        pos = np.searchsorted(ukeys, target)
        pos_c = np.minimum(pos, ncell - 1)
        hit = (pos < ncell) & (ukeys[pos_c] == target)
        src = np.flatnonzero(hit)
        if src.size:
            pair_blocks.append(np.stack([src, pos_c[src]], axis=1))
    pairs = np.ascontiguousarray(np.concatenate(pair_blocks).astype(np.intp))

    parent = np.arange(n, dtype=np.intp)
    size = np.ones(n, dtype=np.intp)
    use = backend or BACKEND
    if use == "cython" and _compiled is not None and exact64:
        _compiled.union_cells(
            lo, hi, np.array(thresh, dtype=np.int64),
            np.ascontiguousarray(order, dtype=np.intp),
            np.ascontiguousarray(starts, dtype=np.intp),
            np.ascontiguousarray(stops, dtype=np.intp),
            np.ascontiguousarray(cell_lo), np.ascontiguousarray(cell_hi),
            pairs, auto_same, parent, size,
        )
    else:
        if use == "cython" and _compiled is None:
            raise RuntimeError("compiled backend requested but extension is not built")
        _kernels_py.union_cells(
            lo.tolist(), hi.tolist(), thresh, order.tolist(), starts.tolist(), stops.tolist(),
            cell_lo.tolist(), cell_hi.tolist(), pairs.tolist(), auto_same, parent, size,
        )
    return canonical_labels(parent)


def canonical_labels(parent: np.ndarray) -> np.ndarray:
    root = np.asarray(parent, dtype=np.intp).copy()
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            break
        root = nxt
    n = len(root)
    smallest = np.full(n, n, dtype=np.intp)
    np.minimum.at(smallest, root, np.arange(n, dtype=np.intp))
    return smallest[root]
