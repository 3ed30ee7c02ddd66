"""Test problem generators and MatrixMarket / CSV file I/O."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ContractError, ParseError
from .matrixkit import BandedSym, CSRSym, DenseSym, DiagonalSym, identity

__all__ = [
    "ProblemSpec", "build_problem", "gen_diag_cluster", "gen_laplacian_slit",
    "gen_laplacian_rect", "mm_read", "mm_write", "write_spectrum_csv",
    "read_spectrum_csv",
]


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0


def gen_diag_cluster(n):
    """Diagonal pair with six clustered leading eigenvalues.

    ``mu_i = 10.07 - 0.01 i`` for i = 1..6, followed by ``n - 6`` equidistant
    values from 9 down to 1 (both endpoints attained).  Returns ``(M, A)`` with
    ``A = I``.
    """
    n = int(n)
    if n < 8:
        raise ContractError("diag-cluster needs n >= 8")
    head = 10.07 - 0.01 * np.arange(1, 7)
    tail = np.linspace(9.0, 1.0, n - 6)
    mu = np.concatenate((head, tail))
    return DiagonalSym(mu, definiteness="positive-definite"), identity(n)


def _inverse_mesh(h):
    """Integer 1/h; accepts a mesh size (< 1) or the reciprocal itself (>= 1)."""
    frac = Fraction(h).limit_denominator(10**6) if not isinstance(h, Fraction) else h
    inv = 1 / frac if frac < 1 else frac
    if inv.denominator != 1 or abs(float(inv) - (1 / h if h < 1 else h)) > 1e-9 * float(inv):
        raise ContractError(f"1/h must be an integer (got h = {h})")
    return int(inv)


def _band_from_edges(n, diag, lo, hi, vals):
    """Lower band storage from a diagonal and (lower index, higher index) edges."""
    b = int((hi - lo).max(initial=0))
    ab = np.zeros((b + 1, n))
    ab[0] = diag
    ab[hi - lo, lo] = vals
    return ab


def gen_laplacian_slit(h):
    """Five-point Laplacian on [0,2]x[0,1] with the slit {1}x[0.1,0.9].

    Homogeneous Dirichlet conditions on the outer boundary and on the slit;
    slit nodes are removed from the unknowns.  Unknowns are numbered column by
    column (x outer, y fastest) which keeps the band at roughly 1/h.  ``h`` is
    the mesh size (1/h integer) or, if >= 1, its reciprocal.
    """
    m = _inverse_mesh(h)
    if m < 2:
        raise ContractError("1/h must be at least 2")
    xi = np.arange(1, 2 * m)  # x = xi / m
    yk = np.arange(1, m)  # y = yk / m
    X, Y = np.meshgrid(xi, yk, indexing="ij")
    # 0.1 <= y <= 0.9  <=>  m <= 10 yk <= 9 m  (exact integer test)
    slit = (X == m) & (10 * Y >= m) & (10 * Y <= 9 * m)
    index = np.full(X.shape, -1, dtype=np.int64)
    index[~slit] = np.arange(int((~slit).sum()))
    n = int((~slit).sum())
    scale = float(m * m)
    lo, hi = [], []
    for a, b in ((index[:-1, :], index[1:, :]), (index[:, :-1], index[:, 1:])):
        ok = (a >= 0) & (b >= 0)
        lo.append(a[ok])
        hi.append(b[ok])
    lo, hi = np.concatenate(lo), np.concatenate(hi)
    ab = _band_from_edges(n, 4.0 * scale, lo, hi, -scale)
    return BandedSym(ab, definiteness="positive-definite")


def gen_laplacian_rect(nx, ny, hx=None, hy=None):
    """Tensor five-point Laplacian on an nx x ny interior grid.

    Returns ``(A, spectrum)`` with the closed-form eigenvalues sorted ascending.
    Default mesh sizes make the domain the unit square.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ContractError("nx and ny must be positive")
    hx = 1.0 / (nx + 1) if hx is None else float(hx)
    hy = 1.0 / (ny + 1) if hy is None else float(hy)
    cx, cy = 1.0 / hx**2, 1.0 / hy**2
    n = nx * ny
    index = np.arange(n).reshape(nx, ny)
    ab = np.zeros((ny + 1 if nx > 1 else 2, n))
    ab[0] = 2.0 * cx + 2.0 * cy
    if ny > 1:
        lo = index[:, :-1].ravel()
        ab[1, lo] = -cy
    if nx > 1:
        lo = index[:-1, :].ravel()
        ab[ny, lo] = -cx
    p = np.arange(1, nx + 1)
    q = np.arange(1, ny + 1)
    lx = (2.0 - 2.0 * np.cos(p * np.pi / (nx + 1))) * cx
    ly = (2.0 - 2.0 * np.cos(q * np.pi / (ny + 1))) * cy
    spectrum = np.sort((lx[:, None] + ly[None, :]).ravel())
    return BandedSym(ab, definiteness="positive-definite"), spectrum


def build_problem(spec):
    """Return ``(M, A)`` for a ProblemSpec."""
    kind, p = spec.kind, spec.params
    if kind == "diag-cluster":
        return gen_diag_cluster(p.get("n", 6000))
    if kind == "lap-slit":
        A = gen_laplacian_slit(p.get("h", 70))
        return identity(A.n), A
    if kind == "lap-rect":
        A, _ = gen_laplacian_rect(p["nx"], p["ny"], p.get("hx"), p.get("hy"))
        return identity(A.n), A
    if kind == "file":
        A = mm_read(p["A"]) if p.get("A") else None
        M = mm_read(p["M"])
        return M, (A if A is not None else identity(M.n))
    raise ContractError(f"unknown problem kind {kind!r}")


# ---------------------------------------------------------------------------
# MatrixMarket


def _entries(op):
    """Lower-triangle triplets (1-based) of a SymOperator, column-major order."""
    if op.storage == "diagonal":
        i = np.arange(op.n)
        return i + 1, i + 1, op.diagonal()
    ab = op.lower_banded() if op.storage != "csr" else None
    if ab is not None:
        k, j = np.nonzero(ab)
        rows, cols, vals = j + k, j, ab[k, j]
    else:
        rows, cols, vals = op.indices, op._rows, op.data
    order = np.lexsort((rows, cols))
    return rows[order] + 1, cols[order] + 1, vals[order]


def mm_write(op, path, comment=None):
    """Write a SymOperator as a coordinate real symmetric MatrixMarket file."""
    rows, cols, vals = _entries(op)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        for line in (comment or "").splitlines():
            fh.write(f"% {line}\n")
        fh.write(f"{op.n} {op.n} {len(vals)}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r} {c} {v:.17g}\n")


def _choose_storage(n, rows, cols, vals):
    off = rows != cols
    if not off.any():
        d = np.zeros(n)
        d[rows] = vals
        return DiagonalSym(d)
    b = int(np.abs(rows - cols).max())
    if b <= max(8, int(np.sqrt(n))):
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        ab = np.zeros((b + 1, n))
        ab[hi - lo, lo] = vals
        return BandedSym(ab)
    if n <= 200 and len(vals) > n * n // 4:
        a = np.zeros((n, n))
        a[rows, cols] = vals
        a[cols, rows] = vals
        return DenseSym(a)
    return CSRSym.from_coo(rows, cols, vals, n)


def mm_read(path):
    """Read a real symmetric matrix from a MatrixMarket file.

    Coordinate and array formats are accepted with either the ``symmetric`` or
    the ``general`` qualifier; a general file must hold symmetric entries.
    Storage is chosen from the sparsity: diagonal, banded, dense or CSR.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket" or head[1].lower() != "matrix":
        raise ParseError("missing %%MatrixMarket matrix header", 1)
    fmt, fld, sym = (w.lower() for w in head[2:])
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unsupported format {fmt!r}", 1)
    if fld not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field {fld!r}", 1)
    if sym not in ("symmetric", "general"):
        raise ParseError(f"unsupported symmetry {sym!r}", 1)
    pos = 1
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip().startswith("%")):
        pos += 1
    if pos == len(lines):
        raise ParseError("missing size line", pos)
    size = lines[pos].split()
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise ParseError("malformed size line", pos + 1) from None
    if len(dims) != (3 if fmt == "coordinate" else 2) or dims[0] != dims[1]:
        raise ParseError("size line must describe a square matrix", pos + 1)
    n = dims[0]
    body = [(k + 1, ln.split()) for k, ln in enumerate(lines[pos + 1 :], start=pos + 1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    entries = {}

    def put(i, j, v, lineno):
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"index ({i + 1}, {j + 1}) out of range", lineno)
        key = (i, j)
        if key in entries:
            raise ParseError(f"duplicate entry ({i + 1}, {j + 1})", lineno)
        entries[key] = (v, lineno)

    if fmt == "coordinate":
        if len(body) != dims[2]:
            raise ParseError(f"expected {dims[2]} entries, found {len(body)}",
                             body[-1][0] if body else pos + 1)
        for lineno, tok in body:
            if len(tok) != 3:
                raise ParseError("entry must be 'row col value'", lineno)
            try:
                put(int(tok[0]) - 1, int(tok[1]) - 1, float(tok[2]), lineno)
            except ValueError:
                raise ParseError("malformed entry", lineno) from None
    else:
        if sym == "symmetric":
            cells = [(i, j) for j in range(n) for i in range(j, n)]
        else:
            cells = [(i, j) for j in range(n) for i in range(n)]
        if len(body) != len(cells):
            raise ParseError(f"expected {len(cells)} values, found {len(body)}",
                             body[-1][0] if body else pos + 1)
        for (i, j), (lineno, tok) in zip(cells, body):
            if len(tok) != 1:
                raise ParseError("array entry must be a single value", lineno)
            try:
                v = float(tok[0])
            except ValueError:
                raise ParseError("malformed value", lineno) from None
            if v != 0.0 or i == j:
                put(i, j, v, lineno)

    lower = {}
    for (i, j), (v, lineno) in entries.items():
        key = (max(i, j), min(i, j))
        if key in lower:
            if lower[key][0] != v:
                raise ParseError(f"entries ({i + 1}, {j + 1}) and ({j + 1}, {i + 1}) "
                                 "are not symmetric", lineno)
            lower[key] = (v, lineno, True)
        else:
            lower[key] = (v, lineno, i == j)
    if sym == "general":
        for (i, j), (v, lineno, paired) in lower.items():
            if not paired and v != 0.0:
                raise ParseError(f"entry ({i + 1}, {j + 1}) has no symmetric counterpart",
                                 lineno)
    keys = sorted(lower)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    vals = np.array([lower[k][0] for k in keys])
    return _choose_storage(n, rows, cols, vals)


# ---------------------------------------------------------------------------
# spectrum CSV


def write_spectrum_csv(path, values, residuals=None, comment=None):
    """Write ``index,value[,residual]`` rows (1-based index)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in (comment or "").splitlines():
            fh.write(f"# {line}\n")
        if residuals is None:
            fh.write("index,value\n")
            for k, v in enumerate(values, start=1):
                fh.write(f"{k},{v:.17g}\n")
        else:
            fh.write("index,value,residual\n")
            for k, (v, r) in enumerate(zip(values, residuals), start=1):
                fh.write(f"{k},{v:.17g},{r:.6e}\n")


def read_spectrum_csv(path):
    """Return ``(values, residuals or None, comment lines)``."""
    comments, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            if line.startswith("index"):
                header = line.split(",")
                continue
            rows.append((lineno, line.split(",")))
    values, residuals = [], []
    for lineno, tok in rows:
        try:
            values.append(float(tok[1]))
            if len(tok) > 2 and tok[2]:
                residuals.append(float(tok[2]))
        except (IndexError, ValueError):
            raise ParseError("malformed spectrum row", lineno) from None
    res = np.array(residuals) if len(residuals) == len(values) and residuals else None
    del header
    return np.array(values), res, comments
