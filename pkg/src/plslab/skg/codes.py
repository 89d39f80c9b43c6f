"""Binary linear block codes used for syndrome-based reconciliation.

A code is described by its parity-check matrix ``H`` of shape (n-k, n).
Reconciliation never needs the generator: Alice publishes ``s = H a`` and
Bob flips the coset leader of ``H b + s`` into his block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from plslab.errors import DomainError

MAX_LOOKUP_CHECKS = 20


# --------------------------------------------------------------------------
# GF(2) helpers

def gf2_rank(m) -> int:
    return len(gf2_row_basis(m))


def gf2_row_basis(m) -> list[int]:
    """Indices of a maximal set of linearly independent rows, greedily in order."""
    m = np.asarray(m, dtype=np.uint8) & 1
    basis: list[np.ndarray] = []   # reduced rows
    pivots: list[int] = []
    chosen: list[int] = []
    for i, row in enumerate(m):
        r = row.copy()
        for b, p in zip(basis, pivots):
            if r[p]:
                r ^= b
        nz = np.flatnonzero(r)
        if nz.size:
            p = int(nz[0])
            for j, b in enumerate(basis):
                if b[p]:
                    basis[j] = b ^ r
            basis.append(r)
            pivots.append(p)
            chosen.append(i)
    return chosen


def gf2_inv(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint8) & 1
    n = m.shape[0]
    if m.shape != (n, n):
        raise DomainError("gf2_inv needs a square matrix")
    aug = np.concatenate([m, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        piv = np.flatnonzero(aug[col:, col])
        if piv.size == 0:
            raise DomainError("matrix is singular over GF(2)")
        p = col + int(piv[0])
        if p != col:
            aug[[col, p]] = aug[[p, col]]
        rows = np.flatnonzero(aug[:, col])
        rows = rows[rows != col]
        aug[rows] ^= aug[col]
    return aug[:, n:].copy()


def _syndrome_ints(syn: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(syn.shape[-1] - 1, -1, -1, dtype=np.int64)
    return syn.astype(np.int64) @ weights


def _coset_leaders(h: np.ndarray) -> np.ndarray:
    r, n = h.shape
    table = np.zeros((1 << r, n), dtype=np.uint8)
    filled = np.zeros(1 << r, dtype=bool)
    filled[0] = True
    remaining = (1 << r) - 1
    cols = h.T.astype(np.int64)
    col_ints = _syndrome_ints(cols)
    for w in range(1, n + 1):
        for support in itertools.combinations(range(n), w):
            s = 0
            for j in support:
                s ^= int(col_ints[j])
            if not filled[s]:
                filled[s] = True
                table[s, list(support)] = 1
                remaining -= 1
        if remaining == 0:
            break
    return table


# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockCode:
    """An (n, k) binary code with a syndrome-lookup decoder.

    The lookup table holds a minimum-weight coset leader for every
    syndrome, so decoding is maximum likelihood on a BSC.
    """

    n: int
    k: int
    parity_check: np.ndarray
    name: str = ""
    decoder: str = "lookup"
    _leaders: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        h = np.asarray(self.parity_check, dtype=np.uint8) & 1
        object.__setattr__(self, "parity_check", h)
        if not 0 < self.k < self.n:
            raise DomainError("need 0 < k < n")
        if h.shape != (self.n - self.k, self.n):
            raise DomainError(f"parity_check must have shape {(self.n - self.k, self.n)}")
        if gf2_rank(h) != self.n - self.k:
            raise DomainError("parity_check must have full row rank")
        if self.decoder == "lookup" and self.n - self.k > MAX_LOOKUP_CHECKS:
            raise DomainError("lookup decoding limited to n-k <= %d" % MAX_LOOKUP_CHECKS)

    @property
    def checks(self) -> int:
        return self.n - self.k

    @property
    def kappa(self) -> float:
        """Syndrome bits per key bit, ``(n-k)/k``."""
        return (self.n - self.k) / self.k

    @property
    def leaders(self) -> np.ndarray:
        if self._leaders is None:
            object.__setattr__(self, "_leaders", _coset_leaders(self.parity_check))
        return self._leaders

    def blocks(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size % self.n:
            raise DomainError(f"bit length {bits.size} is not a multiple of n={self.n}")
        return bits.reshape(-1, self.n)

    def syndrome(self, blocks) -> np.ndarray:
        """Per-block syndromes, shape (B, n-k)."""
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8))
        return ((blocks.astype(np.int32) @ self.parity_check.T.astype(np.int32)) & 1).astype(np.uint8)

    def correct(self, blocks, target) -> np.ndarray:
        """Flip into each block the coset leader that moves it onto ``target``."""
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8))
        target = np.atleast_2d(np.asarray(target, dtype=np.uint8))
        diff = self.syndrome(blocks) ^ target
        return blocks ^ self.leaders[_syndrome_ints(diff)]

    def correctable_weight(self) -> int:
        """Largest t such that every pattern of weight <= t is a coset leader."""
        weights = self.leaders.sum(axis=1)
        t = 0
        for w in range(1, self.n + 1):
            expected = sum(1 for _ in itertools.combinations(range(self.n), w))
            if np.count_nonzero(weights == w) == expected:
                t = w
            else:
                break
        return t


def hamming_parity_check(r: int) -> np.ndarray:
    """Columns are the binary expansions of 1 .. 2^r - 1 (MSB in row 0)."""
    if r < 2:
        raise DomainError("Hamming codes need r >= 2")
    n = (1 << r) - 1
    cols = np.arange(1, n + 1)
    return ((cols[None, :] >> np.arange(r - 1, -1, -1)[:, None]) & 1).astype(np.uint8)


def hamming_code(r: int = 3) -> BlockCode:
    """Hamming(2^r - 1, 2^r - 1 - r); r = 3 gives Hamming(7,4)."""
    n = (1 << r) - 1
    return BlockCode(n, n - r, hamming_parity_check(r), name=f"hamming({n},{n - r})")


class ProductCode(BlockCode):
    """Product of a component code with itself, decoded iteratively.

    Codewords are n1 x n1 arrays (row-major) whose rows and columns are all
    component codewords.  The row and column checks together are redundant,
    so the published syndrome uses a full-rank subset of them; Bob expands
    it back to every row/column target and alternates row and column
    lookup decoding.
    """

    def __init__(self, component: BlockCode, max_iter: int = 8):
        n1, k1 = component.n, component.k
        h1 = component.parity_check
        r1 = h1.shape[0]
        n = n1 * n1
        full = np.zeros((2 * n1 * r1, n), dtype=np.uint8)
        for i in range(n1):             # checks on row i
            full[i * r1:(i + 1) * r1, i * n1:(i + 1) * n1] = h1
        for j in range(n1):             # checks on column j
            rows = slice(n1 * r1 + j * r1, n1 * r1 + (j + 1) * r1)
            full[rows, j::n1] = h1
        basis = gf2_row_basis(full)
        h = full[basis]
        # express every check as a combination of the published ones
        pivot_cols = gf2_row_basis(h.T)
        inv = gf2_inv(h[:, pivot_cols])
        expand = (full[:, pivot_cols].astype(np.int32) @ inv.astype(np.int32)) & 1
        object.__setattr__(self, "component", component)
        object.__setattr__(self, "max_iter", max_iter)
        object.__setattr__(self, "_expand", expand.astype(np.uint8))
        super().__init__(n, k1 * k1, h, name=f"product({component.name})", decoder="iterative")

    def correct(self, blocks, target) -> np.ndarray:
        comp = self.component
        n1, r1 = comp.n, comp.checks
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8)).copy()
        target = np.atleast_2d(np.asarray(target, dtype=np.uint8))
        full_t = ((target.astype(np.int32) @ self._expand.T.astype(np.int32)) & 1).astype(np.uint8)
        row_t = full_t[:, : n1 * r1].reshape(-1, n1, r1)
        col_t = full_t[:, n1 * r1:].reshape(-1, n1, r1)
        arr = blocks.reshape(-1, n1, n1)
        for _ in range(self.max_iter):
            flat_rows = arr.reshape(-1, n1)
            arr = comp.correct(flat_rows, row_t.reshape(-1, r1)).reshape(-1, n1, n1)
            cols = arr.transpose(0, 2, 1).reshape(-1, n1)
            arr = comp.correct(cols, col_t.reshape(-1, r1)).reshape(-1, n1, n1).transpose(0, 2, 1)
            if np.array_equal(self.syndrome(arr.reshape(-1, self.n)), target):
                break
        return np.ascontiguousarray(arr.reshape(-1, self.n))

    def correctable_weight(self) -> int:
        # Guaranteed by one row-then-column sweep.  With single-error-correcting
        # components, two errors sharing a row become three errors in distinct
        # columns after the row pass, which the column pass removes.
        t1 = self.component.correctable_weight()
        return 2 if t1 == 1 else t1


def make_code(name: str) -> BlockCode:
    """Parse ``hamming7``, ``hamming15`` ..., or ``product-hamming7``."""
    name = name.lower().replace("_", "-")
    if name.startswith("product-"):
        return ProductCode(make_code(name[len("product-"):]))
    if name.startswith("hamming"):
        n = int(name[len("hamming"):] or 7)
        r = n.bit_length()
        if (1 << r) - 1 != n:
            raise DomainError(f"no Hamming code of length {n}")
        return hamming_code(r)
    raise DomainError(f"unknown code {name!r}")
