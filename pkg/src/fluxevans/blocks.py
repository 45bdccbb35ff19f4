"""Block-partition bookkeeping shared by every formulation.

State vectors split as u = (u1, u2) with u1 of size r (hyperbolic part) and
u2 of size n - r (parabolic part).  First-order phase vectors split as
(f1, f2, u2) with sizes (r, n - r, n - r), giving total size N = 2n - r.
A single Partition object carries all index arithmetic so the different
coefficient-matrix assemblies cannot drift apart in their slicing.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partition:
    n: int
    r: int

    @property
    def q(self):
        """Size of the parabolic block, n - r."""
        return self.n - self.r

    @property
    def N(self):
        """Phase-space dimension of the first-order systems, 2n - r."""
        return 2 * self.n - self.r

    # --- slices into an n-vector / n x n matrix ---
    @property
    def s1(self):
        return slice(0, self.r)

    @property
    def s2(self):
        return slice(self.r, self.n)

    def split(self, M):
        """Return the four blocks (M11, M12, M21, M22) of an n x n matrix.

        Works batched: M may have leading axes, the last two are the matrix.
        """
        s1, s2 = self.s1, self.s2
        return (M[..., s1, s1], M[..., s1, s2],
                M[..., s2, s1], M[..., s2, s2])

    def lower_right(self, M):
        """The (n-r) x (n-r) parabolic block of an n x n viscosity matrix."""
        return M[..., self.s2, self.s2]

    def lower_left(self, M):
        return M[..., self.s2, self.s1]

    # --- slices into an N-vector / N x N matrix (phase blocks f1, f2, u2) ---
    @property
    def p1(self):
        return slice(0, self.r)

    @property
    def p2(self):
        return slice(self.r, self.n)

    @property
    def p3(self):
        return slice(self.n, self.N)

    def assemble(self, rows, batch_shape=()):
        """Assemble an N x N matrix from a 3 x 3 nested list of blocks.

        Entries may be None (zero block) or arrays broadcastable over
        batch_shape plus the block shape.
        """
        out = np.zeros(batch_shape + (self.N, self.N), dtype=complex)
        slices = (self.p1, self.p2, self.p3)
        for i, row in enumerate(rows):
            for j, blk in enumerate(row):
                if blk is not None:
                    out[..., slices[i], slices[j]] = blk
        return out
