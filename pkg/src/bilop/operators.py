"""Direct numerical evaluation of bilinear operators defined by symbols,
kernel extraction, a principal-value quadrature for the truncated bilinear
Hilbert transform, and maximal (supremum-over-truncations) variants.

The frequency representation realized here is

    T(f, g)(x) = sum_{a,b} e^{2 pi i x (xi_a + xi_b)} sigma(x, xi_a, xi_b)
                 F(xi_a) G(xi_b) dxi^2

with F, G the continuum-calibrated spectra of `signal.dft_forward`.  With
sigma identically 1 this reproduces the pointwise product exactly.  An
O(n^3) reference path is always available and is the oracle of record; the
FFT-accelerated path for x-independent symbols must match it.

Note on orientation: with this library's transform pair, the quadrature
p.v. integral f(x - l1 y) g(x - l2 y) dy/y realizes the operator whose
symbol is the complex conjugate, -i pi sign(l1 a + l2 b), of
`symbols.bht_sign_symbol`; the two evaluation routes agree after negation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bumps import smooth_cutoff
from .signal import (
    SampledFunction,
    Spectrum,
    dft_forward,
    dft_inverse,
    spectral_derivative,
)
from .symbols import SingularLine, Symbol

__all__ = [
    "eval_direct",
    "eval_direct_reference",
    "BilinearKernel",
    "TruncationLadder",
    "kernel_from_symbol",
    "bht_truncated",
    "maximal_freq",
    "maximal_avg",
    "maximal_kernel",
    "derivation_identity_check",
    "DerivationReport",
]


def _spectra(f: SampledFunction, g: SampledFunction):
    if not f.same_grid(g):
        raise ValueError("f and g must share one grid")
    return dft_forward(f), dft_forward(g)


def eval_direct_reference(symbol: Symbol, f: SampledFunction, g: SampledFunction) -> SampledFunction:
    """O(n^3) double frequency sum; the oracle of record."""
    F, G = _spectra(f, g)
    xi = F.x
    dxi = F.spacing
    x = f.x
    A, B = np.meshgrid(xi, xi, indexing="ij")
    phases = np.exp(2j * np.pi * np.outer(x, xi))  # phases[j, a] = e^{2 pi i x_j xi_a}
    out = np.empty(f.n, dtype=complex)
    if not symbol.x_dependent:
        M = symbol(0.0, A, B)
        for j in range(f.n):
            left = phases[j] * F.values
            right = phases[j] * G.values
            out[j] = left @ M @ right
    else:
        for j in range(f.n):
            M = symbol(x[j], A, B)
            left = phases[j] * F.values
            right = phases[j] * G.values
            out[j] = left @ M @ right
    return f.with_values(out * dxi * dxi)


def _eval_fast_x_independent(symbol: Symbol, f: SampledFunction, g: SampledFunction) -> SampledFunction:
    """Row-wise FFT acceleration: one inverse transform per frequency row."""
    F, G = _spectra(f, g)
    xi = F.x
    dxi = F.spacing
    n = f.n
    A, B = np.meshgrid(xi, xi, indexing="ij")
    M = symbol(0.0, A, B)
    # inner[a, j] = sum_b e^{2 pi i x_j xi_b} M[a, b] G[b] dxi, by batched inverse DFT
    rows = M * G.values[None, :]
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    phase0 = np.exp(2j * np.pi * f.origin * xi)
    inner = np.fft.ifft(rows * phase0[None, :], axis=1) * n * dxi
    inner *= signs[None, :]
    phases = np.exp(2j * np.pi * np.outer(xi, f.x))  # [a, j]
    out = np.einsum("a,aj,aj->j", F.values * dxi, phases, inner)
    return f.with_values(out)


def eval_direct(
    symbol: Symbol,
    f: SampledFunction,
    g: SampledFunction,
    force_reference: bool = False,
) -> SampledFunction:
    """Evaluate the bilinear operator of `symbol` on (f, g).

    Uses the FFT fast path for x-independent symbols unless
    `force_reference`; both paths agree to 1e-10 relative.
    """
    if symbol.x_dependent or force_reference:
        return eval_direct_reference(symbol, f, g)
    return _eval_fast_x_independent(symbol, f, g)


# -- kernel extraction -------------------------------------------------------


@dataclass(frozen=True)
class BilinearKernel:
    """Sampled kernel K(x, y, z) of a bilinear operator on a symmetric box."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    values: np.ndarray  # shape (len(x), len(y), len(z))
    freq_extent: float
    freq_count: int
    window: str

    def __post_init__(self):
        if self.values.shape != (self.x.size, self.y.size, self.z.size):
            raise ValueError("kernel value grid does not match axes")


def kernel_from_symbol(
    symbol: Symbol,
    extent: float = 8.0,
    points: int = 33,
    freq_extent: float = 8.0,
    freq_count: int = 128,
    window: str = "smooth",
) -> BilinearKernel:
    """Oscillatory-sum realization of the kernel

        K(x, y, z) = int e^{2 pi i [a (x - y) + b (x - z)]} sigma(x, a, b) da db

    over the truncated frequency box [-freq_extent, freq_extent]^2 with a
    smooth roll-off window (recorded in the output metadata).  The integral
    is distributional; any numerical realization must regularize, and this
    one does so by the declared window.
    """
    axis = np.linspace(-extent, extent, points)
    xi = np.linspace(-freq_extent, freq_extent, freq_count)
    dxi = xi[1] - xi[0]
    if extent > 0.5 / dxi:
        raise ValueError(
            "frequency resolution too coarse for the spatial box: the discrete "
            f"sum repeats with period {1.0 / dxi:.3g} in x-y; need extent <= "
            f"{0.5 / dxi:.3g} or freq_count >= {int(np.ceil(4 * extent * freq_extent)) + 1}"
        )
    A, B = np.meshgrid(xi, xi, indexing="ij")
    if window == "smooth":
        w = smooth_cutoff(2.0 * A / freq_extent) * smooth_cutoff(2.0 * B / freq_extent)
    elif window == "sharp":
        w = np.ones_like(A)
    else:
        raise ValueError(f"unknown window {window!r}")

    u = axis[:, None] - axis[None, :]  # u[i, k] = x_i - y_k (same table for z)
    phase_u = np.exp(2j * np.pi * np.multiply.outer(u, xi))  # [ix, iy, a]
    vals = np.empty((axis.size, axis.size, axis.size), dtype=complex)
    for i, xv in enumerate(axis):
        M = symbol(xv, A, B) * w if symbol.x_dependent else None
        if M is None:
            if i == 0:
                M0 = symbol(0.0, A, B) * w
            M = M0
        # K(x_i, y, z) = phase_u[i, y, :] @ M @ phase_u[i, z, :]^T * dxi^2
        left = phase_u[i]  # [iy, a]
        vals[i] = (left @ M @ left.T) * dxi * dxi
    return BilinearKernel(
        x=axis, y=axis, z=axis, values=vals,
        freq_extent=freq_extent, freq_count=freq_count, window=window,
    )


def kernel_decay_fit(
    kernel: BilinearKernel,
    direction: tuple = (1.0, 1.0),
    x_index: int | None = None,
    floor: float = 1e-9,
):
    """Fitted exponent M of |K| ~ (1 + |x-y| + |x-z|)^(-M) along a (u, v) ray.

    Samples K(x, x - t*du, x - t*dv) for growing t and regresses log|K|
    against log(1 + |u| + |v|).  Samples below `floor` times the ray maximum
    are dropped: past that point the windowed oscillatory sum measures its
    own roll-off ringing, not the kernel.  Returns (M, residual).
    """
    du, dv = direction
    nrm = max(abs(du), abs(dv))
    du, dv = du / nrm, dv / nrm
    if x_index is None:
        x_index = kernel.x.size // 2
    xv = kernel.x[x_index]
    extent = min(kernel.y.max() - kernel.y.min(), kernel.z.max() - kernel.z.min()) / 2.2
    ts = np.linspace(0.5, extent, 24)
    logs, vals = [], []
    for t in ts:
        yq = xv - t * du
        zq = xv - t * dv
        iy = int(np.argmin(np.abs(kernel.y - yq)))
        iz = int(np.argmin(np.abs(kernel.z - zq)))
        mag = abs(kernel.values[x_index, iy, iz])
        if mag > 0:
            logs.append(np.log(1.0 + abs(xv - kernel.y[iy]) + abs(xv - kernel.z[iz])))
            vals.append(np.log(mag))
    logs = np.asarray(logs)
    vals = np.asarray(vals)
    keep = vals >= vals.max() + np.log(floor)
    logs, vals = logs[keep], vals[keep]
    if logs.size < 3:
        raise ValueError("too few kernel samples above the noise floor to fit")
    slope, intercept = np.polyfit(logs, vals, 1)
    resid = float(np.sqrt(np.mean((vals - (slope * logs + intercept)) ** 2)))
    return -float(slope), resid


# -- truncated bilinear Hilbert transform ------------------------------------


def _shift(spec: Spectrum, origin: float, amount: float) -> np.ndarray:
    """Values of the function with spectrum `spec` at grid points x - amount."""
    shifted = Spectrum(spec.origin, spec.spacing, spec.values * np.exp(-2j * np.pi * spec.x * amount))
    return dft_inverse(shifted, origin).values


def bht_truncated(
    f: SampledFunction,
    g: SampledFunction,
    line: SingularLine,
    eps: float,
    R: float,
    nodes_per_octave: int = 256,
) -> SampledFunction:
    """Quadrature of p.v. int_{eps <= |y| <= R} f(x - l1 y) g(x - l2 y) dy / y.

    Uses log-spaced nodes with trapezoid weights and pairs the +y and -y
    nodes before summing, so the even part of the integrand cancels exactly.
    Shifted samples are produced spectrally (band-limited interpolation), so
    inputs should be essentially band-limited and supported away from the
    periodic wrap.
    """
    if not 0 < eps < R:
        raise ValueError(f"need 0 < eps < R, got eps={eps}, R={R}")
    if not f.same_grid(g):
        raise ValueError("f and g must share one grid")
    # drop the unpaired Nyquist bin: non-integer shifts of it carry a sign
    # ambiguity that would break the exact +-y cancellation below
    def _despike(spec: Spectrum) -> Spectrum:
        v = spec.values.copy()
        v[0] = 0.0
        return Spectrum(spec.origin, spec.spacing, v)

    F, G = _despike(dft_forward(f)), _despike(dft_forward(g))
    octaves = np.log2(R / eps)
    m = max(int(np.ceil(octaves * nodes_per_octave)), 8)
    u = np.linspace(np.log(eps), np.log(R), m + 1)
    y = np.exp(u)
    w = np.full(m + 1, u[1] - u[0])
    w[0] *= 0.5
    w[-1] *= 0.5  # trapezoid in log coordinates: dy/y = du
    out = np.zeros(f.n, dtype=complex)
    for yk, wk in zip(y, w):
        plus = _shift(F, f.origin, line.l1 * yk) * _shift(G, f.origin, line.l2 * yk)
        minus = _shift(F, f.origin, -line.l1 * yk) * _shift(G, f.origin, -line.l2 * yk)
        out += wk * (plus - minus)
    return f.with_values(out)


# -- maximal operators --------------------------------------------------------


@dataclass(frozen=True)
class TruncationLadder:
    """Sorted positive truncation radii (or (eps, r) pairs) for maximal sups."""

    radii: tuple

    def __post_init__(self):
        if len(self.radii) == 0:
            raise ValueError("empty truncation ladder")
        r = list(self.radii)
        if any(
            (not np.all(np.asarray(x, dtype=float) > 0)) for x in r
        ):
            raise ValueError("ladder entries must be positive")
        if sorted(r) != r:
            raise ValueError("ladder must be strictly increasing")
        if len(set(r)) != len(r):
            raise ValueError("ladder must be strictly increasing")

    @classmethod
    def dyadic(cls, r_min: float, r_max: float, per_octave: int = 1) -> "TruncationLadder":
        count = max(int(np.ceil(np.log2(r_max / r_min) * per_octave)) + 1, 2)
        return cls(tuple(np.geomspace(r_min, r_max, count)))


def maximal_freq(
    symbol: Symbol,
    f: SampledFunction,
    g: SampledFunction,
    ladder: TruncationLadder,
    phi=smooth_cutoff,
    line: SingularLine | None = None,
) -> SampledFunction:
    """Pointwise max over the ladder of |T with symbol sigma * (1 - phi(r * form))|.

    `phi` is smooth and equal to 1 near 0, so each truncation removes the
    part of the symbol within ~1/r of the singular line.
    """
    line = line or symbol.line
    if line is None:
        raise ValueError("maximal_freq needs a singular line")
    best = np.zeros(f.n)
    for r in ladder.radii:
        def _eval(x, a, b, _r=r):
            return symbol(x, a, b) * (1.0 - phi(_r * line.form(a, b)))

        trunc = Symbol(
            eval=_eval,
            line=line,
            scale=symbol.scale,
            x_dependent=symbol.x_dependent,
            declared_class=symbol.declared_class,
            name=f"{symbol.name}_maxtrunc",
        )
        best = np.maximum(best, np.abs(eval_direct(trunc, f, g).values))
    return f.with_values(best.astype(complex))


def _avg_radius_cells(r: float, h: float) -> int:
    """Half-width in cells of the snapped symmetric average window.

    Snaps down, so the effective radius (2M+1)h/2 never exceeds the
    requested one (radii below h/2 use the single-cell window).
    """
    return max(int(np.floor(r / h - 0.5 + 1e-12)), 0)


def maximal_avg(
    f: SampledFunction,
    g: SampledFunction,
    L: float,
    ladder: TruncationLadder,
) -> SampledFunction:
    """sup over ladder radii r <= L of (1/r) int_{|t| <= r} |f(x-t) g(x+t)| dt.

    Radii snap to half-integer grid multiples r_hat = (2M+1)h/2 so each
    average is the plain mean over a symmetric window of grid shifts; the
    constant pair f = g = 1 then yields exactly 2 at every radius.
    """
    if not f.same_grid(g):
        raise ValueError("f and g must share one grid")
    if any(r > L * (1 + 1e-12) for r in ladder.radii):
        raise ValueError("ladder radii must lie in (0, L]")
    h = f.spacing
    af = np.abs(f.values)
    ag = np.abs(g.values)
    best = np.zeros(f.n)
    for r in ladder.radii:
        M = _avg_radius_cells(r, h)
        r_hat = (2 * M + 1) * h / 2.0
        acc = np.zeros(f.n)
        for m in range(-M, M + 1):
            acc += np.roll(af, m) * np.roll(ag, -m)
        best = np.maximum(best, acc * h / r_hat)
    return f.with_values(best.astype(complex))


def maximal_kernel(
    f: SampledFunction,
    g: SampledFunction,
    kernel,
    L: float,
    pairs,
) -> SampledFunction:
    """sup over (eps, r) pairs of |int_{eps <= |y| <= r} f(x-y) g(x+y) K(y) dy|.

    `kernel` is a callable K(y) declared to satisfy |K(y)| <= C/|y| and
    |K'(y)| <= C/|y|^2; quadrature nodes are the grid shifts y = m h with
    +-y paired exactly.
    """
    if not f.same_grid(g):
        raise ValueError("f and g must share one grid")
    h = f.spacing
    best = np.zeros(f.n)
    for eps, r in pairs:
        if not 0 < eps < r <= L * (1 + 1e-12):
            raise ValueError(f"malformed truncation pair ({eps}, {r}): need 0 < eps < r <= L")
        m_lo = max(int(np.ceil(eps / h)), 1)
        m_hi = int(np.floor(r / h))
        acc = np.zeros(f.n, dtype=complex)
        for m in range(m_lo, m_hi + 1):
            y = m * h
            plus = np.roll(f.values, m) * np.roll(g.values, -m)   # f(x - y) g(x + y)
            minus = np.roll(f.values, -m) * np.roll(g.values, m)  # f(x + y) g(x - y)
            acc += (plus * kernel(y) + minus * kernel(-y)) * h
        best = np.maximum(best, np.abs(acc))
    return f.with_values(best.astype(complex))


# -- derivation identity ------------------------------------------------------


@dataclass(frozen=True)
class DerivationReport:
    order: int
    max_abs_discrepancy: float
    lhs_scale: float


def _x_derivative_symbol(symbol: Symbol, order: int, step: float = 1e-2) -> Symbol:
    """Fourth-order central finite difference of sigma in x, orders 0..2."""
    if order == 0:
        return symbol
    if not symbol.x_dependent:
        return Symbol(
            eval=lambda x, a, b: np.zeros(np.broadcast(x, a, b).shape, dtype=complex),
            line=symbol.line,
            scale=symbol.scale,
            x_dependent=False,
            declared_class=symbol.declared_class,
            name=f"{symbol.name}_dx{order}",
        )
    if order == 1:
        def _eval(x, a, b):
            return (
                -symbol(x + 2 * step, a, b)
                + 8 * symbol(x + step, a, b)
                - 8 * symbol(x - step, a, b)
                + symbol(x - 2 * step, a, b)
            ) / (12 * step)
    elif order == 2:
        def _eval(x, a, b):
            return (
                -symbol(x + 2 * step, a, b)
                + 16 * symbol(x + step, a, b)
                - 30 * symbol(x, a, b)
                + 16 * symbol(x - step, a, b)
                - symbol(x - 2 * step, a, b)
            ) / (12 * step * step)
    else:
        raise ValueError("x-derivative implemented for orders 0..2")
    return Symbol(
        eval=_eval,
        line=symbol.line,
        scale=symbol.scale,
        x_dependent=True,
        declared_class=symbol.declared_class,
        name=f"{symbol.name}_dx{order}",
    )


def derivation_identity_check(
    symbol: Symbol,
    f: SampledFunction,
    g: SampledFunction,
    order: int,
    fd_step: float = 1e-2,
) -> DerivationReport:
    """Check D^n T(f, g) = sum_{i+j+k=n} n!/(i! j! k!) T_{d_x^k sigma}(D^i f, D^j g).

    The left side differentiates the evaluated output spectrally; the right
    side evaluates the operator on spectrally differentiated inputs with
    finite-difference x-derivatives of the symbol.  Inputs must be band
    limited with margin (output frequencies live at sums of input
    frequencies), or the two sides see different aliasing.
    """
    from math import factorial

    lhs = spectral_derivative(eval_direct(symbol, f, g), order)
    rhs = np.zeros(f.n, dtype=complex)
    derivs_f = [f] + [spectral_derivative(f, i) for i in range(1, order + 1)]
    derivs_g = [g] + [spectral_derivative(g, j) for j in range(1, order + 1)]
    for k in range(order + 1):
        sym_k = _x_derivative_symbol(symbol, k, fd_step)
        for i in range(order - k + 1):
            j = order - k - i
            coeff = factorial(order) // (factorial(i) * factorial(j) * factorial(k))
            rhs += coeff * eval_direct(sym_k, derivs_f[i], derivs_g[j]).values
    disc = float(np.max(np.abs(lhs.values - rhs)))
    return DerivationReport(
        order=order,
        max_abs_discrepancy=disc,
        lhs_scale=float(np.max(np.abs(lhs.values))),
    )
