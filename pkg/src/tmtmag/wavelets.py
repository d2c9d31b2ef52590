"""Filter-bank wavelet transforms on finite discrete signals.

Provides the decimated transform (``dwt_decompose`` / ``dwt_reconstruct``)
and the undecimated (stationary, "a trous") transform (``uwt_decompose`` /
``iuwt_reconstruct``) over a small registry of filter banks.

Conventions, fixed once for the whole package:

* analysis is correlation; decimated with stride 2, undecimated with
  stride 1 and level-j filters upsampled by ``2**j``::

      c_j[k] = sum_i h0[i] * c_{j-1}[2*k + i]        (decimated)
      d_j[k] = sum_i h1[i] * c_{j-1}[k + 2**j * i]   (undecimated)

* synthesis is convolution with the ``g0``/``g1`` pair; the undecimated
  inverse averages the redundant branches with a factor 1/2 per level,

* highpass filters come from the lowpass pair by the alternating flip
  ``h1[k] = (-1)**k * g0[L-1-k]`` and ``g1[k] = (-1)**k * h0[L-1-k]``,
  with both lowpass filters zero-padded to a common even length and a
  common symmetry center,

* the default boundary extension is periodic (circular), which makes the
  undecimated transform exactly shift covariant and both round trips
  exact to rounding.  A reflective ``"symmetric"`` extension is available
  for the undecimated transform; it is exact away from the edges only.

Detail levels are indexed finest first: ``details[0]`` is the highest
frequency band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

_SQRT2 = np.sqrt(2.0)

#: analysis lowpass half taps of the biorthogonal 6.8 bank, center outward.
#: 17-tap symmetric filter; values are the float64 rounding of the exact
#: maxflat-halfband factorization (sum = sqrt(2), eight zeros at z = -1).
_BIOR68_ANALYSIS_LO = (
    0.8259229974584397,
    0.42079628460983926,
    -0.09405920349576163,
    -0.07726317316721135,
    0.049732903490937654,
    0.01193456527972673,
    -0.0169906398676071,
    -0.0019142861290808862,
    0.0019088317364850261,
)

#: synthesis lowpass half taps of the biorthogonal 6.8 bank (11-tap dual,
#: six zeros at z = -1).
_BIOR68_SYNTHESIS_LO = (
    0.7589077294537632,
    0.41784910915032025,
    -0.040367979030381904,
    -0.07872200106266872,
    0.014467504896774099,
    0.014426282505622248,
)

#: Daubechies-2 scaling taps (extremal phase, 4 taps).
_DB2_LO = (
    0.48296291314469025,
    0.836516303737469,
    0.22414386804185735,
    -0.12940952255092145,
)


class WaveletError(ValueError):
    """Raised for invalid transform inputs (length, depth, mode)."""


@dataclass(frozen=True)
class WaveletBasis:
    """Analysis/synthesis filter quadruple of a (bi)orthogonal bank.

    ``h0``/``h1`` are the analysis lowpass/highpass taps, ``g0``/``g1``
    the synthesis pair.  All four arrays share one even length.
    """

    name: str
    h0: np.ndarray
    h1: np.ndarray
    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        for attr in ("h0", "h1", "g0", "g1"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        lengths = {self.h0.size, self.h1.size, self.g0.size, self.g1.size}
        if len(lengths) != 1 or self.h0.size % 2 != 0:
            raise WaveletError(
                f"basis {self.name!r}: filters must share one even length, got {sorted(lengths)}"
            )
        if abs(self.h1.sum()) > 1e-12:
            raise WaveletError(f"basis {self.name!r}: highpass does not annihilate constants")
        if abs(self.h0.sum() - _SQRT2) > 1e-12:
            raise WaveletError(f"basis {self.name!r}: lowpass taps do not sum to sqrt(2)")

    def __len__(self) -> int:
        return self.h0.size


def _alternating_flip(taps: np.ndarray) -> np.ndarray:
    L = taps.size
    signs = np.where(np.arange(L) % 2 == 0, 1.0, -1.0)
    return signs * taps[::-1]


def _pad_centered(half_taps: Sequence[float], length: int, center: int) -> np.ndarray:
    out = np.zeros(length)
    out[center] = half_taps[0]
    for k in range(1, len(half_taps)):
        out[center - k] = half_taps[k]
        out[center + k] = half_taps[k]
    return out


def basis_from_lowpass_pair(name: str, analysis_lo: np.ndarray, synthesis_lo: np.ndarray) -> WaveletBasis:
    """Build the full quadruple from an aligned lowpass pair.

    Both filters must already share the same even length and the same
    symmetry center; the highpass filters follow by alternating flip.
    """
    analysis_lo = np.asarray(analysis_lo, dtype=float)
    synthesis_lo = np.asarray(synthesis_lo, dtype=float)
    return WaveletBasis(
        name=name,
        h0=analysis_lo,
        h1=_alternating_flip(synthesis_lo),
        g0=synthesis_lo,
        g1=_alternating_flip(analysis_lo),
    )


def _make_symmetric_basis(name, analysis_half, synthesis_half) -> WaveletBasis:
    # pad the two odd-length symmetric filters to one even length with
    # aligned centers so the analysis/synthesis delays cancel exactly
    reach = max(len(analysis_half), len(synthesis_half)) - 1
    center = reach
    length = 2 * reach + 2
    return basis_from_lowpass_pair(
        name,
        _pad_centered(analysis_half, length, center),
        _pad_centered(synthesis_half, length, center),
    )


def _registry() -> dict[str, WaveletBasis]:
    haar_lo = np.array([_SQRT2 / 2.0, _SQRT2 / 2.0])
    db2_lo = np.array(_DB2_LO)
    return {
        "haar": basis_from_lowpass_pair("haar", haar_lo, haar_lo),
        "db2": basis_from_lowpass_pair("db2", db2_lo, db2_lo),
        "bior6.8": _make_symmetric_basis("bior6.8", _BIOR68_ANALYSIS_LO, _BIOR68_SYNTHESIS_LO),
    }


_BASES = _registry()


def basis_registry(name: str) -> WaveletBasis:
    """Look up a filter bank by name (``haar``, ``db2``, ``bior6.8``)."""
    try:
        return _BASES[name]
    except KeyError:
        known = ", ".join(sorted(_BASES))
        raise WaveletError(f"unknown wavelet basis {name!r} (known: {known})") from None


def available_bases() -> tuple[str, ...]:
    return tuple(sorted(_BASES))


def _as_basis(basis: WaveletBasis | str) -> WaveletBasis:
    return basis_registry(basis) if isinstance(basis, str) else basis


@dataclass(frozen=True)
class WaveletDecomposition:
    """Multi-level coefficient set, finest detail level first.

    In undecimated mode every array has the signal length; in decimated
    mode level j has ceil(N / 2**(j+1)) samples and ``signal_length``
    records N for the inverse.
    """

    details: list[np.ndarray]
    approximation: np.ndarray
    levels: int
    mode: str  # "decimated" | "undecimated"
    boundary: str
    signal_length: int

    def __post_init__(self):
        if self.mode not in ("decimated", "undecimated"):
            raise WaveletError(f"unknown decomposition mode {self.mode!r}")
        if len(self.details) != self.levels + 1:
            raise WaveletError(
                f"expected {self.levels + 1} detail arrays, got {len(self.details)}"
            )


def default_levels(n_samples: int) -> int:
    """Deepest supported level: floor(log2(N)) - 1."""
    if n_samples < 4:
        raise WaveletError(f"signal too short for any decomposition (N={n_samples})")
    return int(np.floor(np.log2(n_samples))) - 1


def _check_signal(signal) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if x.shape[-1] == 0:
        raise WaveletError("empty signal")
    return x


def _reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    # whole-axis reflection with period 2N, valid for any integer index
    m = np.mod(idx, 2 * n)
    return np.where(m < n, m, 2 * n - 1 - m)


def _analysis_step(a: np.ndarray, taps_lo, taps_hi, step: int, boundary: str):
    n = a.shape[-1]
    if boundary == "periodic":
        lo = np.zeros_like(a)
        hi = np.zeros_like(a)
        for i in range(taps_lo.size):
            r = np.roll(a, -step * i, axis=-1)
            lo += taps_lo[i] * r
            hi += taps_hi[i] * r
        return lo, hi
    if boundary == "symmetric":
        idx = np.arange(n)[:, None] + step * np.arange(taps_lo.size)[None, :]
        gathered = a[..., _reflect_indices(idx, n)]
        lo = np.einsum("...nl,l->...n", gathered, taps_lo, optimize=False)
        hi = np.einsum("...nl,l->...n", gathered, taps_hi, optimize=False)
        return lo, hi
    raise WaveletError(f"unknown boundary mode {boundary!r}")


def _synthesis_step(lo_in, hi_in, taps_lo, taps_hi, step: int, boundary: str):
    n = lo_in.shape[-1]
    if boundary == "periodic":
        acc = np.zeros_like(lo_in)
        for i in range(taps_lo.size):
            acc += taps_lo[i] * np.roll(lo_in, step * i, axis=-1)
            acc += taps_hi[i] * np.roll(hi_in, step * i, axis=-1)
        return acc
    if boundary == "symmetric":
        idx = np.arange(n)[:, None] - step * np.arange(taps_lo.size)[None, :]
        ridx = _reflect_indices(idx, n)
        acc = np.einsum("...nl,l->...n", lo_in[..., ridx], taps_lo, optimize=False)
        acc += np.einsum("...nl,l->...n", hi_in[..., ridx], taps_hi, optimize=False)
        return acc
    raise WaveletError(f"unknown boundary mode {boundary!r}")


# ---------------------------------------------------------------------------
# undecimated (stationary) transform
# ---------------------------------------------------------------------------

def uwt_analyze(signal, basis: WaveletBasis | str, levels: int, boundary: str = "periodic"):
    """Array-level undecimated analysis along the last axis.

    Returns ``(details, approximation)`` with ``details`` stacked as an
    array of shape ``(levels + 1,) + signal.shape``.  Accepts batches;
    all samples along leading axes are transformed independently.
    """
    basis = _as_basis(basis)
    x = _check_signal(signal)
    n = x.shape[-1]
    if levels < 0:
        raise WaveletError(f"levels must be >= 0, got {levels}")
    if 2 ** (levels + 1) > n:
        raise WaveletError(
            f"signal too short for {levels + 1} undecimated levels (N={n}, need >= {2 ** (levels + 1)})"
        )
    details = np.empty((levels + 1,) + x.shape)
    a = x
    for j in range(levels + 1):
        a, d = _analysis_step(a, basis.h0, basis.h1, 1 << j, boundary)
        details[j] = d
    return details, a


def uwt_synthesize(details, approximation, basis: WaveletBasis | str, boundary: str = "periodic"):
    """Inverse of :func:`uwt_analyze`; averages redundant branches."""
    basis = _as_basis(basis)
    a = np.asarray(approximation, dtype=float)
    levels = len(details) - 1
    for j in range(levels, -1, -1):
        a = 0.5 * _synthesis_step(a, np.asarray(details[j], dtype=float),
                                  basis.g0, basis.g1, 1 << j, boundary)
    return a


def uwt_decompose(signal, basis: WaveletBasis | str, levels: int | None = None,
                  boundary: str = "periodic") -> WaveletDecomposition:
    """Undecimated decomposition of a signal to ``levels`` detail levels."""
    x = _check_signal(signal)
    if levels is None:
        levels = default_levels(x.shape[-1])
    stacked, approx = uwt_analyze(x, basis, levels, boundary)
    return WaveletDecomposition(
        details=[stacked[j] for j in range(levels + 1)],
        approximation=approx,
        levels=levels,
        mode="undecimated",
        boundary=boundary,
        signal_length=x.shape[-1],
    )


def iuwt_reconstruct(decomp: WaveletDecomposition, basis: WaveletBasis | str) -> np.ndarray:
    """Reconstruct a signal from an undecimated decomposition."""
    if decomp.mode != "undecimated":
        raise WaveletError(f"expected an undecimated decomposition, got {decomp.mode!r}")
    n = decomp.signal_length
    for j, d in enumerate(decomp.details):
        if d.shape[-1] != n:
            raise WaveletError(f"detail level {j} has length {d.shape[-1]}, expected {n}")
    if decomp.approximation.shape[-1] != n:
        raise WaveletError("approximation length does not match the signal length")
    return uwt_synthesize(decomp.details, decomp.approximation, basis, decomp.boundary)


# ---------------------------------------------------------------------------
# decimated transform
# ---------------------------------------------------------------------------

def _decimated_lengths(n: int, levels: int) -> list[int]:
    lengths = []
    for _ in range(levels):
        n = (n + 1) // 2
        lengths.append(n)
    return lengths


def dwt_decompose(signal, basis: WaveletBasis | str, levels: int,
                  boundary: str = "periodic") -> WaveletDecomposition:
    """Decimated decomposition down to detail level ``levels`` (periodized).

    ``levels`` is the index of the deepest detail level, so ``levels + 1``
    detail arrays are produced; odd intermediate lengths extend by one
    duplicated sample, giving ceil-halved coefficient lengths.
    """
    basis = _as_basis(basis)
    x = _check_signal(signal)
    n = x.shape[-1]
    if levels < 1:
        raise WaveletError(f"decimated transform needs levels >= 1, got {levels}")
    if n < 2 ** levels:
        raise WaveletError(f"signal too short for detail level {levels} (N={n})")
    if boundary != "periodic":
        raise WaveletError("the decimated transform supports periodic boundaries only")
    details = []
    a = x
    for _ in range(levels + 1):
        if a.shape[-1] % 2:
            a = np.concatenate([a, a[..., -1:]], axis=-1)
        lo, hi = _analysis_step(a, basis.h0, basis.h1, 1, boundary)
        details.append(hi[..., ::2])
        a = lo[..., ::2]
    return WaveletDecomposition(
        details=details,
        approximation=a,
        levels=levels,
        mode="decimated",
        boundary=boundary,
        signal_length=n,
    )


def dwt_reconstruct(decomp: WaveletDecomposition, basis: WaveletBasis | str) -> np.ndarray:
    """Inverse of :func:`dwt_decompose`."""
    basis = _as_basis(basis)
    if decomp.mode != "decimated":
        raise WaveletError(f"expected a decimated decomposition, got {decomp.mode!r}")
    n_levels = len(decomp.details)
    expected = _decimated_lengths(decomp.signal_length, n_levels)
    for j, (d, want) in enumerate(zip(decomp.details, expected)):
        if d.shape[-1] != want:
            raise WaveletError(f"detail level {j} has length {d.shape[-1]}, expected {want}")
    if decomp.approximation.shape[-1] != expected[-1]:
        raise WaveletError("approximation length does not match the deepest level")
    a = decomp.approximation
    for j in range(n_levels - 1, -1, -1):
        d = decomp.details[j]
        n_up = 2 * d.shape[-1]
        up_a = np.zeros(a.shape[:-1] + (n_up,))
        up_d = np.zeros_like(up_a)
        up_a[..., ::2] = a
        up_d[..., ::2] = d
        a = _synthesis_step(up_a, up_d, basis.g0, basis.g1, 1, decomp.boundary)
        target = decomp.signal_length if j == 0 else expected[j - 1]
        a = a[..., :target]
    return a
