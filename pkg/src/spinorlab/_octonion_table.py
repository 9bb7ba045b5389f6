"""Frozen octonion basis multiplication table.

``TABLE[s][t] = (k, sign)`` means ``e_s * e_t = sign * e_k`` for the basis
``e_0 = 1, e_1..e_7``.  The table is the Cayley-Dickson double of the
quaternions (basis 1, i, j, k with ij = k) under the doubling rule

    (a, b) (c, d) = (a c - conj(d) b,  d a + b conj(c)),

with e_1 = (i, 0), e_2 = (j, 0), e_3 = (k, 0), e_4 = (0, 1), e_5 = (0, i),
e_6 = (0, j), e_7 = (0, k).  It is checked in as data so every module shares
one sign convention; the test suite regenerates it independently.
"""

TABLE: tuple[tuple[tuple[int, int], ...], ...] = (
    ((0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1)),
    ((1, 1), (0, -1), (3, 1), (2, -1), (5, 1), (4, -1), (7, -1), (6, 1)),
    ((2, 1), (3, -1), (0, -1), (1, 1), (6, 1), (7, 1), (4, -1), (5, -1)),
    ((3, 1), (2, 1), (1, -1), (0, -1), (7, 1), (6, -1), (5, 1), (4, -1)),
    ((4, 1), (5, -1), (6, -1), (7, -1), (0, -1), (1, 1), (2, 1), (3, 1)),
    ((5, 1), (4, 1), (7, -1), (6, 1), (1, -1), (0, -1), (3, -1), (2, 1)),
    ((6, 1), (7, 1), (4, 1), (5, -1), (2, -1), (3, 1), (0, -1), (1, -1)),
    ((7, 1), (6, -1), (5, 1), (4, 1), (3, -1), (2, -1), (1, 1), (0, -1)),
)
