"""Periodic finite differences, circular blur, and the FFT u-subproblem solver.

Images are 2-d float arrays indexed ``[row, col]``. A dual field (the split
gradient variable or its multiplier) is a ``(2, H, W)`` array whose first
component holds x-differences (along columns) and whose second holds
y-differences (along rows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IllPosedOperatorError


def grad(u: np.ndarray) -> np.ndarray:
    """Forward differences with wrap-around: ``(u[i,j+1]-u[i,j], u[i+1,j]-u[i,j])``."""
    return np.stack((np.roll(u, -1, axis=1) - u, np.roll(u, -1, axis=0) - u))


def grad_adjoint(q: np.ndarray) -> np.ndarray:
    """Exact adjoint of :func:`grad` (negative backward-difference divergence)."""
    qx, qy = q[0], q[1]
    return (np.roll(qx, 1, axis=1) - qx) + (np.roll(qy, 1, axis=0) - qy)


def neg_laplacian(u: np.ndarray) -> np.ndarray:
    """Five-point periodic ``-Laplacian``; equals ``grad_adjoint(grad(u))``."""
    return (4.0 * u - np.roll(u, 1, 0) - np.roll(u, -1, 0)
            - np.roll(u, 1, 1) - np.roll(u, -1, 1))


def diff_symbol(n: int) -> np.ndarray:
    """``|d(w)|^2 = 2 - 2 cos(2 pi w / n)``, the squared symbol of a forward difference."""
    return 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True, eq=False)
class BlurKernel:
    """A normalized odd-sized convolution kernel."""

    taps: np.ndarray
    sigma: float = float("nan")

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
            raise ConfigurationError(f"kernel must be 2-d with odd sides, got {taps.shape}")
        taps = taps.copy()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]

    def rotated(self) -> "BlurKernel":
        return BlurKernel(self.taps[::-1, ::-1], self.sigma)

    def otf(self, shape) -> np.ndarray:
        """Full complex transfer function on an image of the given shape."""
        h, w = shape
        kh, kw = self.taps.shape
        if kh > h or kw > w:
            raise ConfigurationError(f"kernel {self.taps.shape} larger than image {shape}")
        pad = np.zeros(shape)
        pad[:kh, :kw] = self.taps
        pad = np.roll(pad, (-(kh // 2), -(kw // 2)), axis=(0, 1))
        return np.fft.fft2(pad)


def gaussian_kernel(size: int, sigma: float) -> BlurKernel:
    """Normalized ``size x size`` Gaussian; the ``(G, size, sigma)`` blur."""
    if size < 1 or size % 2 == 0:
        raise ConfigurationError(f"kernel size must be odd and positive, got {size}")
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    c = (size - 1) / 2
    r = np.arange(size) - c
    taps = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma**2))
    return BlurKernel(taps / taps.sum(), float(sigma))


def convolve(u: np.ndarray, k: BlurKernel) -> np.ndarray:
    """Circular convolution ``sum_{a,b} k[a,b] u[i-a+c, j-b+c]``."""
    return np.real(np.fft.ifft2(np.fft.fft2(u) * k.otf(u.shape)))


def adjoint_convolve(u: np.ndarray, k: BlurKernel) -> np.ndarray:
    return convolve(u, k.rotated())


class Identity:
    """The identity degradation (pure denoising)."""

    def apply(self, u):
        return u

    def adjoint(self, u):
        return u

    def symbol_sq(self, shape):
        return np.ones(shape)

    def __repr__(self):
        return "Identity()"


class Convolution:
    """Periodic blur by a fixed kernel."""

    def __init__(self, kernel: BlurKernel):
        self.kernel = kernel
        self._otf = {}

    def otf(self, shape):
        shape = tuple(shape)
        if shape not in self._otf:
            self._otf[shape] = self.kernel.otf(shape)
        return self._otf[shape]

    def apply(self, u):
        return np.real(np.fft.ifft2(np.fft.fft2(u) * self.otf(u.shape)))

    def adjoint(self, u):
        # conjugate transfer function == convolution with the rotated kernel
        return np.real(np.fft.ifft2(np.fft.fft2(u) * np.conj(self.otf(u.shape))))

    def symbol_sq(self, shape):
        return np.abs(self.otf(shape)) ** 2

    def __repr__(self):
        return f"Convolution(size={self.kernel.size}, sigma={self.kernel.sigma:g})"


class USolver:
    """Solves ``(alpha A^T A + beta grad^T grad) u = alpha A^T f + grad^T (mu + beta q)``.

    The left-hand operator is diagonal in the 2-d DFT basis, so the solve is
    one forward and one inverse transform. Denominators are computed once at
    construction; instances hold no mutable state after that.
    """

    def __init__(self, shape, A, alpha: float, beta: float, rel_floor: float = 1e-14):
        if not (alpha > 0 and beta > 0):
            raise ConfigurationError("alpha and beta must be positive")
        self.shape = tuple(shape)
        self.A = A
        self.alpha = float(alpha)
        self.beta = float(beta)
        h, w = self.shape
        lap = diff_symbol(h)[:, None] + diff_symbol(w)[None, :]
        denom = self.alpha * A.symbol_sq(self.shape) + self.beta * lap
        if denom.min() <= rel_floor * denom.max():
            raise IllPosedOperatorError(
                "A^T A is singular at some frequency; the model is not coercive")
        self.denom = denom

    def rhs(self, f, q, mu):
        return self.alpha * self.A.adjoint(f) + grad_adjoint(mu + self.beta * q)

    def solve_rhs(self, rhs):
        return np.real(np.fft.ifft2(np.fft.fft2(rhs) / self.denom))

    def solve(self, f, q, mu):
        return self.solve_rhs(self.rhs(f, q, mu))

    def apply_normal(self, u):
        """The left-hand operator, applied directly in the pixel domain."""
        return self.alpha * self.A.adjoint(self.A.apply(u)) + self.beta * neg_laplacian(u)


def solve_u_subproblem(f, q, mu, A, alpha: float, beta: float) -> np.ndarray:
    return USolver(np.shape(f), A, alpha, beta).solve(f, q, mu)
