"""Polynomial / transfer-function algebra, realization, H-infinity norms, balanced truncation.

Everything here is continuous-time LTI over the Laplace variable s. Polynomials
store real coefficients in ascending powers. All objects are immutable and all
operations are pure functions, so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    AlgebraicLoop,
    ImproperSystem,
    OrderTooLarge,
    PoleOnGrid,
    Unstable,
)

_ADD_TRIM_REL = 1e-13      # leading coefficients that are addition-cancellation noise
_ZERO_COEFF_REL = 1e-12    # coefficients treated as exactly zero in limit evaluation
_CANCEL_TOL = 1e-7         # root-matching cancellation tolerance (scaled)
_STAB_TOL = 1e-9           # stability margin: Re(root) < -tol*max(1, |root|)


def _trim_exact(coeffs: np.ndarray) -> np.ndarray:
    # Coefficient magnitudes here legitimately span tens of decades (products of
    # widely spread pole magnitudes), so trailing terms are dropped only when
    # they are exactly zero. Cancellation noise is handled at addition time,
    # where the scale of the cancelling terms is known.
    keep = coeffs.size
    while keep > 1 and coeffs[keep - 1] == 0.0:
        keep -= 1
    return coeffs[:keep]


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Real polynomial, coefficients in ascending powers of s."""

    coeffs: np.ndarray

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and np.array_equal(
            self.coeffs, other.coeffs
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __init__(self, coeffs: Iterable[float]):
        arr = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        arr = _trim_exact(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self.coeffs)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(self.coeffs.size, other.coeffs.size)
        out = np.zeros(n)
        mag = np.zeros(n)
        out[: self.coeffs.size] += self.coeffs
        mag[: self.coeffs.size] += np.abs(self.coeffs)
        out[: other.coeffs.size] += other.coeffs
        mag[: other.coeffs.size] += np.abs(other.coeffs)
        keep = n
        while keep > 1 and abs(out[keep - 1]) <= _ADD_TRIM_REL * mag[keep - 1]:
            out[keep - 1] = 0.0
            keep -= 1
        return Polynomial(out[:keep])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.is_zero() or other.is_zero():
                return Polynomial([0.0])
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.array([], dtype=complex)
        return poly_roots(self.coeffs)

    def shift_down(self, k: int) -> "Polynomial":
        """Divide by s**k, assuming the lowest k coefficients are (numerically) zero."""
        return Polynomial(self.coeffs[k:]) if k < self.coeffs.size else Polynomial([0.0])

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)})"


def poly_from_roots(roots: Sequence[complex], lead: float = 1.0) -> Polynomial:
    """Monic-from-roots construction, scaled by `lead`; imaginary residue discarded."""
    c = np.array([1.0 + 0.0j])
    for r in roots:
        c = np.convolve(c, np.array([-r, 1.0]))
    return Polynomial(np.real(c) * lead)


def poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial, with magnitude pre-scaling.

    High-order closed-loop denominators mix coefficient magnitudes over tens of
    decades; substituting s -> alpha*x before the companion eigenproblem keeps
    the balanced matrix well conditioned.
    """
    c = _trim_exact(np.asarray(coeffs, dtype=float))
    n = c.size - 1
    if n < 1:
        return np.array([], dtype=complex)
    lead, low = abs(c[-1]), abs(c[0])
    if low > 0.0 and lead > 0.0:
        alpha = (low / lead) ** (1.0 / n)
        alpha = min(max(alpha, 1e-30), 1e30)
    else:
        alpha = 1.0
    scaled = c * alpha ** np.arange(n + 1)
    scaled /= np.max(np.abs(scaled))
    return np.roots(scaled[::-1]) * alpha


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Coefficient convolution; degree adds for nonzero inputs."""
    return a * b


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    return a + b


def _normalize_pair(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = max(np.max(np.abs(num)), np.max(np.abs(den)))
    if scale > 1e8 or (0.0 < scale < 1e-8):
        num = num / scale
        den = den / scale
    return num, den


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """Ratio of two real polynomials in s."""

    num: Polynomial
    den: Polynomial

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalFunction)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((self.num, self.den))

    def __init__(self, num, den):
        if not isinstance(num, Polynomial):
            num = Polynomial(num)
        if not isinstance(den, Polynomial):
            den = Polynomial(den)
        if den.is_zero():
            raise ZeroDivisionError("denominator is the zero polynomial")
        n, d = _normalize_pair(num.coeffs, den.coeffs)
        object.__setattr__(self, "num", Polynomial(n))
        object.__setattr__(self, "den", Polynomial(d))

    @classmethod
    def constant(cls, k: float) -> "RationalFunction":
        return cls([k], [1.0])

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    def is_strictly_proper(self) -> bool:
        return self.num.degree < self.den.degree

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return RationalFunction(self.num * other.num, self.den * other.den)
        return RationalFunction(self.num * float(other), self.den)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(float(other))
        if np.array_equal(self.den.coeffs, other.den.coeffs):
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(float(other))
        return self + (other * -1.0)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(float(other))
        if other.num.is_zero():
            raise ZeroDivisionError("division by the zero transfer function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def poles(self) -> np.ndarray:
        return self.den.roots()

    def zeros(self) -> np.ndarray:
        return self.num.roots()

    def reduced(self) -> "RationalFunction":
        """Cancel numerator/denominator root pairs within the matching tolerance.

        Returns self untouched when nothing cancels, so the common path costs
        no floating-point rebuild error.
        """
        if self.num.is_zero() or self.num.degree == 0 or self.den.degree == 0:
            return self
        zn = list(self.num.roots())
        zd = list(self.den.roots())
        keep_n: list[complex] = []
        cancelled = 0
        for r in zn:
            best_j, best_d = -1, np.inf
            for j, q in enumerate(zd):
                d = abs(r - q)
                if d < best_d:
                    best_j, best_d = j, d
            if best_j >= 0 and best_d <= _CANCEL_TOL * max(1.0, abs(r)):
                zd.pop(best_j)
                cancelled += 1
            else:
                keep_n.append(r)
        if cancelled == 0:
            return self
        lead = self.num.coeffs[-1] / self.den.coeffs[-1]
        num = poly_from_roots(keep_n, lead)
        den = poly_from_roots(zd, 1.0)
        return RationalFunction(num, den)

    def __repr__(self) -> str:
        return f"RationalFunction({list(self.num.coeffs)}, {list(self.den.coeffs)})"


def tf_feedback(g: RationalFunction, h: RationalFunction) -> RationalFunction:
    """Close h as negative feedback around g: returns g / (1 + g*h)."""
    num = g.num * h.den
    den = g.den * h.den + g.num * h.num
    if den.is_zero():
        raise AlgebraicLoop("1 + g*h is identically zero")
    return RationalFunction(num, den).reduced()


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """Complex response sampled on a strictly increasing frequency grid [rad/s]."""

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        va = np.asarray(self.values, dtype=complex)
        if om.shape != va.shape or om.ndim != 1:
            raise ValueError("omegas and values must be 1-D arrays of equal length")
        if np.any(np.diff(om) <= 0):
            raise ValueError("omegas must be strictly increasing")
        om.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "values", va)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def freq_response(sys: RationalFunction, omegas: Sequence[float]) -> FrequencyResponse:
    """Evaluate num(jw)/den(jw) on a grid; raises PoleOnGrid at (near-)poles."""
    om = np.asarray(omegas, dtype=float)
    s = 1j * om
    den_vals = sys.den(s)
    dmag = np.abs(den_vals)
    # scale-aware pole detection: compare against the denominator magnitude envelope
    env = np.polynomial.polynomial.polyval(
        np.maximum(np.abs(om), 1.0), np.abs(sys.den.coeffs)
    )
    bad = dmag <= 1e-12 * env
    if np.any(bad):
        raise PoleOnGrid(f"denominator vanishes near omega={om[bad][0]:g} rad/s")
    return FrequencyResponse(om, sys.num(s) / den_vals)


def log_grid(lo: float = 1e-2, hi: float = 1e6, n: int = 200) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n)


def dc_gain(sys: RationalFunction) -> float:
    """Gain at s=0, cancelling coincident s-factors; returns +inf when the pole wins."""
    ncoef, dcoef = sys.num.coeffs, sys.den.coeffs
    ntol = _ZERO_COEFF_REL * np.linalg.norm(ncoef)
    dtol = _ZERO_COEFF_REL * np.linalg.norm(dcoef)
    nz = 0
    while nz < ncoef.size and abs(ncoef[nz]) <= ntol:
        nz += 1
    dz = 0
    while dz < dcoef.size and abs(dcoef[dz]) <= dtol:
        dz += 1
    if sys.num.is_zero() or nz >= ncoef.size:
        return 0.0
    k = min(nz, dz)
    n0 = ncoef[k] if k < ncoef.size else 0.0
    d0 = dcoef[k] if k < dcoef.size else 0.0
    if abs(d0) <= dtol:
        return np.inf
    return float(n0 / d0)


def is_stable(sys: RationalFunction) -> bool:
    """All denominator roots strictly in the open left half-plane."""
    roots = sys.poles()
    if roots.size == 0:
        return True
    return bool(np.all(roots.real < -_STAB_TOL * np.maximum(1.0, np.abs(roots))))


# ---------------------------------------------------------------------------
# state space
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Dense (A, B, C, D) realization; n states, m inputs, p outputs."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __init__(self, A, B, C, D):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        C = np.atleast_2d(np.asarray(C, dtype=float))
        D = np.atleast_2d(np.asarray(D, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape[0] != n or C.shape[1] != n:
            raise ValueError("B/C dimensions inconsistent with A")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError("D dimensions inconsistent with B/C")
        for M in (A, B, C, D):
            M.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self.order == 0:
            return np.array([], dtype=complex)
        return scipy.linalg.eigvals(self.A)

    def is_stable(self) -> bool:
        lam = self.eigenvalues()
        if lam.size == 0:
            return True
        return bool(np.all(lam.real < -_STAB_TOL * np.maximum(1.0, np.abs(lam))))

    def transfer_at(self, s: complex) -> np.ndarray:
        if self.order == 0:
            return self.D.astype(complex)
        sol = np.linalg.solve(s * np.eye(self.order) - self.A, self.B)
        return self.C @ sol + self.D

    def frequency_response(self, omegas: Sequence[float]) -> FrequencyResponse:
        """SISO frequency response (first input/output) on a grid."""
        om = np.asarray(omegas, dtype=float)
        vals = np.array([self.transfer_at(1j * w)[0, 0] for w in om], dtype=complex)
        return FrequencyResponse(om, vals)


def realize(sys: RationalFunction) -> StateSpaceModel:
    """Controllable-canonical realization with a balancing similarity transform.

    The balancing (diagonal scaling) leaves the transfer function unchanged but
    conditions the companion matrix for eigenvalue work and time integration.
    """
    if not sys.is_proper():
        raise ImproperSystem("numerator degree exceeds denominator degree")
    dlead = sys.den.coeffs[-1]
    den = sys.den.coeffs / dlead
    num = sys.num.coeffs / dlead
    n = den.size - 1
    if n == 0:
        return StateSpaceModel(
            np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[num[0] / den[0]]]
        )
    full_num = np.zeros(n + 1)
    full_num[: num.size] = num
    d = full_num[n]
    # strictly proper remainder; the subtraction cancels the feedthrough exactly
    rem_poly = Polynomial(full_num) - Polynomial(den) * d
    rem = np.zeros(n)
    rem[: rem_poly.coeffs.size] = rem_poly.coeffs[:n]
    A = np.zeros((n, n))
    if n > 1:
        A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = rem.reshape(1, n)
    Ab, T = scipy.linalg.matrix_balance(A)
    t = np.diag(T)
    Bb = B / t.reshape(-1, 1)
    Cb = C * t.reshape(1, -1)
    return StateSpaceModel(Ab, Bb, Cb, [[d]])


# ---------------------------------------------------------------------------
# H-infinity norm
# ---------------------------------------------------------------------------


def _gamma_below_peak(ss: "StateSpaceModel", gamma: float) -> bool:
    """Hamiltonian test: does sigma_max(G(jw)) reach gamma somewhere on the axis?

    Eigenvalues of H(gamma) on the imaginary axis mark the crossing
    frequencies. Computed eigenvalues carry real-part noise on badly scaled
    problems, so near-axis eigenvalues are treated as candidate frequencies and
    the transfer function is evaluated there directly to adjudicate.
    """
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    m = D.shape[1]
    R = gamma**2 * np.eye(m) - D.T @ D
    try:
        Rinv = np.linalg.inv(R)
    except np.linalg.LinAlgError:
        return True
    ARC = A + B @ Rinv @ D.T @ C
    H = np.block(
        [
            [ARC, B @ Rinv @ B.T],
            [-C.T @ (np.eye(D.shape[0]) + D @ Rinv @ D.T) @ C, -ARC.T],
        ]
    )
    lam = scipy.linalg.eigvals(H)
    near = np.abs(lam.real) <= 1e-4 * np.maximum(1.0, np.abs(lam))
    if not np.any(near):
        return False
    ws = np.unique(np.abs(lam[near].imag))
    # between two crossing frequencies the gain strictly exceeds gamma, so the
    # midpoints adjudicate robustly; the crossings themselves sit at ~gamma
    points = list(ws) + [0.5 * (a + b) for a, b in zip(ws[:-1], ws[1:])]
    for w in points:
        sig = np.linalg.svd(ss.transfer_at(1j * w), compute_uv=False)[0]
        if sig >= gamma * (1.0 - 1e-10):
            return True
    return False


def hinf_norm_ss(ss: StateSpaceModel, rtol: float = 1e-7) -> float:
    """H-infinity norm of a stable state-space model via Hamiltonian bisection."""
    if not ss.is_stable():
        raise Unstable("H-infinity norm requires a stable system")
    if ss.order == 0:
        return float(np.linalg.svd(ss.D, compute_uv=False)[0]) if ss.D.size else 0.0
    lam = ss.eigenvalues()
    D = ss.D
    probes = [0.0]
    probes += [abs(l) for l in lam]
    probes += [abs(l.imag) for l in lam if abs(l.imag) > 0]
    probes += list(np.logspace(-2, 6, 64))
    lo = float(np.linalg.svd(D, compute_uv=False)[0]) if D.size else 0.0
    for w in probes:
        sig = np.linalg.svd(ss.transfer_at(1j * w), compute_uv=False)[0]
        lo = max(lo, float(sig))
    if lo == 0.0:
        return 0.0
    # normalize gain to O(1) and time to the mean pole scale before forming the
    # Hamiltonian; otherwise its entry spread drowns the crossing eigenvalues
    # in eigensolver noise for large-gain or widely spread systems
    w_scale = float(np.exp(np.mean(np.log(np.abs(lam)))))
    scaled = StateSpaceModel(
        ss.A / w_scale, ss.B, ss.C / (lo * w_scale), ss.D / lo
    )
    slo = 1.0 + 1e-12
    shi = 2.0 * slo
    for _ in range(80):
        if not _gamma_below_peak(scaled, shi):
            break
        shi *= 2.0
    else:
        raise Unstable("failed to bracket the H-infinity norm")
    while (shi - slo) > rtol * shi:
        mid = 0.5 * (shi + slo)
        if _gamma_below_peak(scaled, mid):
            slo = mid
        else:
            shi = mid
    return 0.5 * (shi + slo) * lo


def hinf_norm(sys: RationalFunction, rtol: float = 1e-7) -> float:
    """H-infinity norm of a stable, proper SISO transfer function."""
    if not sys.is_proper():
        raise ImproperSystem("H-infinity norm requires a proper system")
    if sys.num.is_zero():
        return 0.0
    red = sys.reduced()
    if not is_stable(red):
        raise Unstable("H-infinity norm requires a stable system")
    return hinf_norm_ss(realize(red), rtol=rtol)


def _golden_refine(f, xlo: float, xhi: float, iters: int = 120) -> float:
    """Golden-section maximization of f over [xlo, xhi] in log-x; returns max f."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log(xlo), np.log(xhi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(np.exp(c)), f(np.exp(d))
    for _ in range(iters):
        if b - a < 1e-12:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(np.exp(d))
    return max(fc, fd)


def matrix_hinf_norm(
    tfs: Sequence[Sequence[RationalFunction]],
    lo: float = 1e-2,
    hi: float = 1e6,
    n_grid: int = 2000,
    include_dc: bool = True,
) -> float:
    """Peak maximum singular value of a matrix of transfer functions.

    Grid evaluation on a log-spaced frequency grid followed by golden-section
    refinement around the gridded peak. Entries must share no imaginary-axis
    poles inside the grid.
    """
    rows = len(tfs)
    cols = len(tfs[0])
    om = log_grid(lo, hi, n_grid)

    def sigma_max(w: float) -> float:
        M = np.empty((rows, cols), dtype=complex)
        s = 1j * w
        for i in range(rows):
            for j in range(cols):
                M[i, j] = tfs[i][j](s)
        return float(np.linalg.svd(M, compute_uv=False)[0])

    vals = np.empty((om.size, rows, cols), dtype=complex)
    s = 1j * om
    for i in range(rows):
        for j in range(cols):
            vals[:, i, j] = tfs[i][j](s)
    sig = np.linalg.svd(vals, compute_uv=False)[:, 0]
    peak = float(np.max(sig))
    if include_dc:
        dc_ok = all(
            abs(t.den(0.0)) > _ZERO_COEFF_REL * np.linalg.norm(t.den.coeffs)
            for row in tfs
            for t in row
        )
        if dc_ok:
            peak = max(peak, sigma_max(0.0))
    # refine around the tallest local maxima; near-equal resonances between
    # different grid cells would otherwise decide the peak at grid resolution
    interior = np.arange(1, om.size - 1)
    is_local_max = (sig[interior] >= sig[interior - 1]) & (
        sig[interior] >= sig[interior + 1]
    )
    candidates = list(interior[is_local_max]) + [0, om.size - 1]
    candidates.sort(key=lambda i: -sig[i])
    for k in candidates[:5]:
        wlo = om[max(k - 1, 0)]
        whi = om[min(k + 1, om.size - 1)]
        if whi > wlo:
            peak = max(peak, _golden_refine(sigma_max, wlo, whi))
    return peak


# ---------------------------------------------------------------------------
# balanced truncation
# ---------------------------------------------------------------------------


def _gramian_factor(X: np.ndarray) -> np.ndarray:
    Xs = 0.5 * (X + X.T)
    lam, U = scipy.linalg.eigh(Xs)
    lam = np.clip(lam, 0.0, None)
    return U * np.sqrt(lam)


def _balancing_transform(ss: StateSpaceModel):
    Wc = scipy.linalg.solve_continuous_lyapunov(ss.A, -ss.B @ ss.B.T)
    Wo = scipy.linalg.solve_continuous_lyapunov(ss.A.T, -ss.C.T @ ss.C)
    Lc = _gramian_factor(Wc)
    Lo = _gramian_factor(Wo)
    U, hsv, Vt = scipy.linalg.svd(Lo.T @ Lc)
    floor = max(hsv[0], 1.0) * 1e-15
    s_inv_sqrt = 1.0 / np.sqrt(np.maximum(hsv, floor))
    T = Lc @ Vt.T * s_inv_sqrt
    Tinv = (s_inv_sqrt[:, None] * U.T) @ Lo.T
    return T, Tinv, hsv


def hankel_singular_values(ss: StateSpaceModel) -> np.ndarray:
    """Hankel singular values of a stable model, descending."""
    if not ss.is_stable():
        raise Unstable("Hankel singular values require a stable system")
    if ss.order == 0:
        return np.array([])
    _, _, hsv = _balancing_transform(ss)
    return hsv


def balanced_truncate(ss: StateSpaceModel, order: int) -> StateSpaceModel:
    """Balance-and-truncate model reduction.

    The H-infinity error of the reduced model is bounded by twice the sum of
    the truncated Hankel singular values.
    """
    if not ss.is_stable():
        raise Unstable("balanced truncation requires a stable system")
    n = ss.order
    if order < 1 or order > n:
        raise OrderTooLarge(f"requested order {order} not in [1, {n}]")
    T, Tinv, _ = _balancing_transform(ss)
    Ab = Tinv @ ss.A @ T
    Bb = Tinv @ ss.B
    Cb = ss.C @ T
    r = order
    return StateSpaceModel(Ab[:r, :r], Bb[:r, :], Cb[:, :r], ss.D)


def ss_difference(a: StateSpaceModel, b: StateSpaceModel) -> StateSpaceModel:
    """Parallel interconnection realizing a - b (same input/output dimensions)."""
    na, nb = a.order, b.order
    A = np.zeros((na + nb, na + nb))
    A[:na, :na] = a.A
    A[na:, na:] = b.A
    B = np.vstack([a.B, b.B])
    C = np.hstack([a.C, -b.C])
    return StateSpaceModel(A, B, C, a.D - b.D)
