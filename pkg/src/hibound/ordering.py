"""Level-grouped mapping between the code grid and the 1D encoded sequence.

Every grid point belongs to the largest level l (capped at log2 of the
anchor stride) such that 2^l divides all of its coordinates. The sequence
lists points by descending level, row-major within a level, so codes from
the coarsest interpolation strides come first. The map is a total
bijection; anchor-level slots keep their placeholder code.

Small grids apply a cached permutation table built by a stable sort on
(-level, row-major); larger grids evaluate the closed-form rank level by
level. The two routes are interchangeable and tested against each other.
"""

from __future__ import annotations

import numpy as np

from .errors import FieldError

TABLE_LIMIT = 1 << 21
_SLAB = 1 << 22


def level_of(x: int, y: int, z: int, stride: int) -> int:
    """Largest l <= log2(stride) with 2^l dividing x, y, and z."""
    top = stride.bit_length() - 1
    for l in range(top, 0, -1):
        m = (1 << l) - 1
        if (x & m) == 0 and (y & m) == 0 and (z & m) == 0:
            return l
    return 0


def _ceil_div(d: int, m: int) -> int:
    return -(-d // m)


class LevelMap:
    def __init__(self, dims, stride: int):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise FieldError(f"bad dims {dims}")
        stride = int(stride)
        if stride < 1 or stride & (stride - 1):
            raise FieldError(f"anchor stride must be a power of two, got {stride}")
        self.dims = dims
        self.stride = stride
        self.top = stride.bit_length() - 1
        self.count = dims[0] * dims[1] * dims[2]
        # subgrid axis sizes per level: g[l][axis] = number of 2^l multiples
        self.subdims = [tuple(_ceil_div(d, 1 << l) for d in dims) for l in range(self.top + 1)]
        self.prefixes = []
        for l in range(self.top + 1):
            if l == self.top:
                self.prefixes.append(0)
            else:
                gx, gy, gz = self.subdims[l + 1]
                self.prefixes.append(gx * gy * gz)
        self.level_counts = []
        for l in range(self.top + 1):
            gx, gy, gz = self.subdims[l]
            n = gx * gy * gz
            self.level_counts.append(n - self.prefixes[l] if l < self.top else n)
        self._order = None

    # -- closed-form route ---------------------------------------------

    def index_of(self, x: int, y: int, z: int) -> int:
        """Sequence index of one grid point."""
        dx, dy, dz = self.dims
        if not (0 <= x < dx and 0 <= y < dy and 0 <= z < dz):
            raise FieldError(f"coordinate ({x},{y},{z}) outside dims {self.dims}")
        l = level_of(x, y, z, self.stride)
        gx, gy, gz = self.subdims[l]
        X, Y, Z = x >> l, y >> l, z >> l
        rank = X * gy * gz + Y * gz + Z
        if l < self.top:
            ey, ez = (gy + 1) // 2, (gz + 1) // 2
            rank -= ((X + 1) // 2) * ey * ez
            if X % 2 == 0:
                rank -= ((Y + 1) // 2) * ez
                if Y % 2 == 0:
                    rank -= (Z + 1) // 2
        return self.prefixes[l] + rank

    def _iter_level_chunks(self, l: int):
        """Yield (x-slab slice, sequence indices, keep mask) for one level.

        The mask drops subgrid points that belong to a higher level; it is
        None at the top level, where every subgrid point is an anchor slot.
        """
        gx, gy, gz = self.subdims[l]
        plane = gy * gz
        step = max(1, _SLAB // max(plane, 1))
        if l == self.top:
            offset = 0
            for x0 in range(0, gx, step):
                x1 = min(gx, x0 + step)
                n = (x1 - x0) * plane
                yield slice(x0, x1), np.arange(offset, offset + n, dtype=np.int64).reshape(x1 - x0, gy, gz), None
                offset += n
            return
        ey, ez = (gy + 1) // 2, (gz + 1) // 2
        Y = np.arange(gy, dtype=np.int64)[None, :, None]
        Z = np.arange(gz, dtype=np.int64)[None, None, :]
        ye = (Y & 1) == 0
        ze = (Z & 1) == 0
        ycorr = ((Y + 1) // 2) * ez + ye * ((Z + 1) // 2)
        base_yz = Y * gz + Z
        for x0 in range(0, gx, step):
            x1 = min(gx, x0 + step)
            X = np.arange(x0, x1, dtype=np.int64)[:, None, None]
            xe = (X & 1) == 0
            rank = (X * plane + base_yz
                    - ((X + 1) // 2) * (ey * ez)
                    - xe * ycorr)
            keep = ~(xe & ye & ze)
            yield slice(x0, x1), self.prefixes[l] + rank, keep

    # -- table route -----------------------------------------------------

    def order_table(self) -> np.ndarray:
        """Gather permutation: sequence[i] = flat_codes[order[i]].

        Built independently of the closed form, by a stable sort on
        descending level.
        """
        if self._order is None:
            dx, dy, dz = self.dims
            tz = []
            for d in self.dims:
                t = np.zeros(d, np.int8)
                for l in range(1, self.top + 1):
                    t[:: 1 << l] = l
                tz.append(t)
            lv = np.minimum(np.minimum(tz[0][:, None, None], tz[1][None, :, None]),
                            tz[2][None, None, :])
            self._order = np.argsort(-lv.reshape(-1), kind="stable").astype(np.int64)
        return self._order


def reorder(codes: np.ndarray, lmap: LevelMap) -> np.ndarray:
    """Permute the code grid into the level-grouped 1D sequence."""
    if codes.shape != lmap.dims:
        raise FieldError(f"code array shape {codes.shape} does not match map dims {lmap.dims}")
    flat = np.ascontiguousarray(codes).reshape(-1)
    if lmap.count <= TABLE_LIMIT:
        return flat[lmap.order_table()]
    seq = np.empty(lmap.count, codes.dtype)
    grid = flat.reshape(lmap.dims)
    for l in range(lmap.top, -1, -1):
        s = 1 << l
        view = grid[::s, ::s, ::s]
        for xs, idx, keep in lmap._iter_level_chunks(l):
            if keep is None:
                seq[idx.reshape(-1)] = view[xs].reshape(-1)
            else:
                seq[idx[keep]] = view[xs][keep]
    return seq


def inverse_reorder(seq: np.ndarray, lmap: LevelMap) -> np.ndarray:
    """Invert reorder; returns the code grid."""
    if seq.ndim != 1 or seq.size != lmap.count:
        raise FieldError(f"sequence length {seq.size} does not match map point count {lmap.count}")
    if lmap.count <= TABLE_LIMIT:
        flat = np.empty(lmap.count, seq.dtype)
        flat[lmap.order_table()] = seq
        return flat.reshape(lmap.dims)
    grid = np.empty(lmap.dims, seq.dtype)
    for l in range(lmap.top, -1, -1):
        s = 1 << l
        view = grid[::s, ::s, ::s]
        for xs, idx, keep in lmap._iter_level_chunks(l):
            if keep is None:
                view[xs] = seq[idx.reshape(-1)].reshape(idx.shape)
            else:
                view[xs][keep] = seq[idx[keep]]
    return grid
