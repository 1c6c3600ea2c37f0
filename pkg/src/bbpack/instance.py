"""Random 0/1 packing instances and their on-disk text format.

An instance is the data of the program

    max <c, x>  s.t.  A x <= b,  x in {0,1}^n,

with all entries of ``A`` and ``c`` drawn i.i.d. uniform on [0,1] and
capacities ``b_i = beta_i * n`` for densities ``beta_i`` in (0, 1/2).
Generation is bit-identical across platforms: it uses a small counter-based
64-bit generator defined here rather than any library RNG.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
# Fixed tags separating the two draw streams of one instance.
_STREAM_A = 0x41F0E2B1D3C59A77
_STREAM_C = 0xC6A4A7935BD1E995


def mix64(z: int) -> int:
    """SplitMix64 finalizer: the portable scramble behind all seeding here."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


class SplitMix64:
    """Counter-based 64-bit generator.

    The state advances by a fixed odd constant and each output is the mixed
    counter, so the stream depends only on the seed, never on platform word
    size, C library, or numpy version.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def next_float(self) -> float:
        # 53-bit mantissa: uniform on [0, 1), every value an exact double.
        return (self.next_u64() >> 11) * 2.0**-53


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed; names line and field."""


class InstanceDataWarning(UserWarning):
    """Issued when a loaded instance has entries outside the generated range."""


@dataclass(frozen=True, eq=False)
class PackingInstance:
    """Immutable packing-program data.

    ``seed`` is the generation seed, or ``None`` for instances loaded from a
    file. ``beta`` is recoverable as ``b / n`` and exposed as a property.
    """

    m: int
    n: int
    A: np.ndarray
    c: np.ndarray
    b: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need at least one row, got m={self.m}")
        if self.n < self.m + 1:
            raise ValueError(f"need n >= m+1, got n={self.n}, m={self.m}")
        A = np.ascontiguousarray(np.asarray(self.A, dtype=np.float64))
        c = np.ascontiguousarray(np.asarray(self.c, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        if A.shape != (self.m, self.n):
            raise ValueError(f"A has shape {A.shape}, expected {(self.m, self.n)}")
        if c.shape != (self.n,):
            raise ValueError(f"c has shape {c.shape}, expected {(self.n,)}")
        if b.shape != (self.m,):
            raise ValueError(f"b has shape {b.shape}, expected {(self.m,)}")
        for name, arr in (("A", A), ("c", c), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def beta(self) -> np.ndarray:
        out = self.b / self.n
        out.setflags(write=False)
        return out

    def same_data(self, other: "PackingInstance") -> bool:
        """Exact bitwise equality of the program data (seed excluded)."""
        return (
            self.m == other.m
            and self.n == other.n
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.b, other.b)
        )


def generate(m: int, n: int, beta, seed: int) -> PackingInstance:
    """Draw a random packing instance.

    ``beta`` is one density per row (a scalar is accepted when m == 1).
    Entries of A are drawn row-major from one substream of the seed, entries
    of c from a second independent substream, so the two blocks never
    interleave and the layout is stable.
    """
    if np.isscalar(beta):
        beta = (float(beta),)
    beta = tuple(float(v) for v in beta)
    if m < 1:
        raise ValueError(f"need at least one row, got m={m}")
    if n < m + 1:
        raise ValueError(f"need n >= m+1, got n={n}, m={m}")
    if len(beta) != m:
        raise ValueError(f"beta has {len(beta)} entries, expected one per row (m={m})")
    for i, v in enumerate(beta):
        if not 0.0 < v < 0.5:
            raise ValueError(f"beta[{i}]={v} outside the open interval (0, 1/2)")
    seed = int(seed) & _MASK64

    gen_a = SplitMix64(mix64(seed ^ _STREAM_A))
    gen_c = SplitMix64(mix64(seed ^ _STREAM_C))
    A = np.empty((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            A[i, j] = gen_a.next_float()
    c = np.array([gen_c.next_float() for _ in range(n)], dtype=np.float64)
    b = np.array([v * n for v in beta], dtype=np.float64)
    return PackingInstance(m=m, n=n, A=A, c=c, b=b, seed=seed)


def _fmt(v: float) -> str:
    # 17 significant digits round-trip any double exactly.
    return format(float(v), ".17g")


def save(inst: PackingInstance, destination) -> None:
    """Write an instance as text: ``m n``, then b, then c, then the rows of A.

    Lines starting with ``#`` are comments. All floats are written with 17
    significant digits so load(save(inst)) reproduces the data bit for bit.
    """
    lines = []
    if inst.seed is not None:
        lines.append(f"# seed {inst.seed}")
    lines.append(f"{inst.m} {inst.n}")
    lines.append(" ".join(_fmt(v) for v in inst.b))
    lines.append(" ".join(_fmt(v) for v in inst.c))
    for i in range(inst.m):
        lines.append(" ".join(_fmt(v) for v in inst.A[i]))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="ascii")


def _parse_floats(token_line: str, lineno: int, field: str, expected: int) -> np.ndarray:
    tokens = token_line.split()
    if len(tokens) != expected:
        raise InstanceFormatError(
            f"line {lineno}: field '{field}' has {len(tokens)} entries, expected {expected}"
        )
    out = np.empty(len(tokens), dtype=np.float64)
    for k, tok in enumerate(tokens):
        try:
            out[k] = float(tok)
        except ValueError:
            raise InstanceFormatError(
                f"line {lineno}: field '{field}' entry {k + 1} is not a number: {tok!r}"
            ) from None
    return out


def load(source) -> PackingInstance:
    """Parse an instance file written by :func:`save`.

    Structural problems (wrong counts, non-numeric fields) raise
    :class:`InstanceFormatError` naming the offending line. Entries of A or c
    outside [0,1], or negative capacities, are accepted with an
    :class:`InstanceDataWarning` since only generated instances promise the
    unit range.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="ascii")

    rows = []  # (lineno, content) with comments/blanks dropped
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((lineno, stripped))

    if not rows:
        raise InstanceFormatError("line 1: empty instance file")
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 2:
        raise InstanceFormatError(
            f"line {lineno}: field 'm n' has {len(parts)} entries, expected 2"
        )
    try:
        m, n = int(parts[0]), int(parts[1])
    except ValueError:
        raise InstanceFormatError(
            f"line {lineno}: field 'm n' must hold two integers: {header!r}"
        ) from None

    expected_rows = 3 + m
    if len(rows) < expected_rows:
        raise InstanceFormatError(
            f"line {rows[-1][0]}: file ends after {len(rows)} data lines, expected {expected_rows}"
        )
    if len(rows) > expected_rows:
        raise InstanceFormatError(
            f"line {rows[expected_rows][0]}: trailing data beyond the {m} rows of A"
        )

    lineno_b, line_b = rows[1]
    b = _parse_floats(line_b, lineno_b, "b", m)
    lineno_c, line_c = rows[2]
    c = _parse_floats(line_c, lineno_c, "c", n)
    A = np.empty((m, n), dtype=np.float64)
    for i in range(m):
        lineno_a, line_a = rows[3 + i]
        A[i] = _parse_floats(line_a, lineno_a, f"A row {i + 1}", n)

    issues = []
    if np.any(A < 0.0) or np.any(A > 1.0):
        issues.append("A has entries outside [0, 1]")
    if np.any(c < 0.0) or np.any(c > 1.0):
        issues.append("c has entries outside [0, 1]")
    if np.any(b < 0.0):
        issues.append("b has negative capacities")
    if issues:
        warnings.warn("; ".join(issues), InstanceDataWarning, stacklevel=2)

    return PackingInstance(m=m, n=n, A=A, c=c, b=b, seed=None)
