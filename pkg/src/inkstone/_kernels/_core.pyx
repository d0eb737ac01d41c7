# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster kernels: labeling, dilation, resize.

Must stay bit-identical to ``numpy_ops``; the parity suite runs both lanes
on random inputs.
"""

import numpy as np

from libc.math cimport floor


cdef inline int _find(int[::1] parent, int x) nogil:
    while parent[x] != x:
        x = parent[x]
    return x


cdef inline int _merge(int[::1] parent, int lab, int cand) nogil:
    """Union the candidate's root into the running label; smaller id wins."""
    cdef int root
    if cand == 0:
        return lab
    root = _find(parent, cand)
    if lab == 0 or root == lab:
        return root
    if root < lab:
        parent[lab] = root
        return root
    parent[root] = lab
    return lab


def label_8(mask):
    """8-connected two-pass union-find labeling, first-encounter label order."""
    cdef const unsigned char[:, ::1] m = np.ascontiguousarray(mask).view(np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    # at most one new provisional label per 2 pixels in a row
    cdef int cap = <int>((h * w) // 2 + 2)
    parent_arr = np.zeros(cap, dtype=np.int32)
    cdef int[::1] parent = parent_arr
    cdef int nxt = 1, lab, root, r2
    cdef Py_ssize_t y, x

    with nogil:
        for y in range(h):
            for x in range(w):
                if not m[y, x]:
                    continue
                lab = 0
                if x > 0:
                    lab = _merge(parent, lab, labels[y, x - 1])
                if y > 0:
                    lab = _merge(parent, lab, labels[y - 1, x])
                    if x > 0:
                        lab = _merge(parent, lab, labels[y - 1, x - 1])
                    if x + 1 < w:
                        lab = _merge(parent, lab, labels[y - 1, x + 1])
                if lab == 0:
                    lab = nxt
                    parent[nxt] = nxt
                    nxt += 1
                labels[y, x] = lab

    # second pass: compress to roots, then renumber in scan order
    final_arr = np.zeros(nxt, dtype=np.int32)
    cdef int[::1] final = final_arr
    cdef int n = 0
    with nogil:
        for y in range(h):
            for x in range(w):
                lab = labels[y, x]
                if lab == 0:
                    continue
                root = lab
                while parent[root] != root:
                    root = parent[root]
                # path compression for following pixels
                while parent[lab] != lab:
                    r2 = parent[lab]
                    parent[lab] = root
                    lab = r2
                if final[root] == 0:
                    n += 1
                    final[root] = n
                labels[y, x] = final[root]
    return labels_arr, n


def dilate_rect(mask, int kernel_w, int kernel_h):
    """Centered all-ones rectangular dilation, border treated as background."""
    cdef const unsigned char[:, ::1] m = np.ascontiguousarray(mask).view(np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef int rx = kernel_w // 2, ry = kernel_h // 2
    tmp_arr = np.zeros((h, w), dtype=np.uint8)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] tmp = tmp_arr
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef long cnt

    for y in range(h):  # horizontal sliding true-count
        cnt = 0
        for x in range(min(rx + 1, w)):
            cnt += m[y, x]
        for x in range(w):
            tmp[y, x] = cnt > 0
            if x + rx + 1 < w:
                cnt += m[y, x + rx + 1]
            if x >= rx:
                cnt -= m[y, x - rx]
    for x in range(w):  # vertical pass over the horizontal result
        cnt = 0
        for y in range(min(ry + 1, h)):
            cnt += tmp[y, x]
        for y in range(h):
            out[y, x] = cnt > 0
            if y + ry + 1 < h:
                cnt += tmp[y + ry + 1, x]
            if y >= ry:
                cnt -= tmp[y - ry, x]
    return out_arr.view(bool)


def resize_bilinear(src, int out_w, int out_h):
    """Bilinear resize of a float64 raster, half-pixel center convention."""
    cdef const double[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1]
    out_arr = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double sx_scale = w / <double>out_w
    cdef double sy_scale = h / <double>out_h
    cdef Py_ssize_t ox, oy, x0, x1, y0, y1
    cdef double sx, sy, tx, ty, a, b, c, d, top, bot

    for oy in range(out_h):
        sy = (oy + 0.5) * sy_scale - 0.5
        if sy < 0.0:
            sy = 0.0
        elif sy > h - 1:
            sy = h - 1
        y0 = <Py_ssize_t>floor(sy)
        y1 = y0 + 1 if y0 + 1 < h else h - 1
        ty = sy - y0
        for ox in range(out_w):
            sx = (ox + 0.5) * sx_scale - 0.5
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1:
                sx = w - 1
            x0 = <Py_ssize_t>floor(sx)
            x1 = x0 + 1 if x0 + 1 < w else w - 1
            tx = sx - x0
            a = s[y0, x0]
            b = s[y0, x1]
            c = s[y1, x0]
            d = s[y1, x1]
            top = a + tx * (b - a)
            bot = c + tx * (d - c)
            out[oy, ox] = top + ty * (bot - top)
    return out_arr


def resize_nearest(src, int out_w, int out_h):
    """Nearest-neighbor resize of a 1-byte raster, half-pixel centers."""
    arr = np.ascontiguousarray(src)
    cdef const unsigned char[:, ::1] s = arr.view(np.uint8)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1]
    cdef double sx_scale = w / <double>out_w
    cdef double sy_scale = h / <double>out_h
    out_arr = np.empty((out_h, out_w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    xs_arr = np.empty(out_w, dtype=np.intp)
    cdef Py_ssize_t[::1] xs = xs_arr
    cdef Py_ssize_t i, oy, ox, v, sy
    with nogil:
        for i in range(out_w):
            v = <Py_ssize_t>((i + 0.5) * sx_scale)
            xs[i] = v if v < w - 1 else w - 1
        for oy in range(out_h):
            v = <Py_ssize_t>((oy + 0.5) * sy_scale)
            sy = v if v < h - 1 else h - 1
            for ox in range(out_w):
                out[oy, ox] = s[sy, xs[ox]]
    return out_arr.view(arr.dtype) if arr.dtype != np.uint8 else out_arr
