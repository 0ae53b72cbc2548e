"""Dense, basis-indexed linear algebra underneath the rest of the package.

Linear maps are plain numpy arrays acting on coordinate columns, 3-tensors
are arrays T[i, j, k].  The main machinery here is the evaluation of
analytic functions of matrices (two routes, eigendecomposition and Taylor
series, cross-checked when both apply) together with their exact Frechet
derivatives, which the dynamical-field code uses instead of finite
differences.
"""

import math

import numpy as np
from scipy.special import zeta

EPS = float(np.finfo(float).eps)
CBRT_EPS = EPS ** (1.0 / 3.0)

# series evaluation
SERIES_TRUNC_TOL = 1e-16
RADIUS_GUARD = 0.95
POWER_OVERFLOW_LIMIT = 1e280

# eigendecomposition route
EIG_COND_LIMIT = 1e8
CROSS_CHECK_TOL = 1e-10
SINGULAR_SET_TOL = 1e-8
DD_CLOSE_TOL = 1e-6

# block inversions
BLOCK_COND_LIMIT = 1e12

# scalar evaluation switches to the truncated Taylor polynomial below this
# modulus, to dodge cancellation in expressions like (sinh z - z)/z^2
SCALAR_SERIES_CUTOFF = 0.25
SCALAR_SERIES_TERMS = 30


class NonSquare(ValueError):
    pass


class RadiusExceeded(ValueError):
    pass


class SpectrumOnSingularSet(ValueError):
    pass


class EvaluationFailed(RuntimeError):
    pass


class SingularBlock(ValueError):
    pass


class DomainViolation(ValueError):
    pass


def assert_finite(a):
    """Raise if the array contains NaN or Inf; return it unchanged."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise EvaluationFailed("non-finite entries in result")
    return a


def _check_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare("expected a square matrix, got shape %s" % (a.shape,))
    return a


class BlockSplit:
    """Partition of the index range of an ambient space into two ordered blocks.

    Carries the injection matrices (columns are coordinate vectors) and their
    transposes as projections along the complementary block.
    """

    def __init__(self, dim, first, second):
        first = np.asarray(first, dtype=int)
        second = np.asarray(second, dtype=int)
        merged = np.sort(np.concatenate([first, second]))
        if not np.array_equal(merged, np.arange(dim)):
            raise ValueError("index sets do not partition range(%d)" % dim)
        self.dim = int(dim)
        self.first = first
        self.second = second
        self.inj1 = injection(dim, first)
        self.inj2 = injection(dim, second)
        self.proj1 = self.inj1.T
        self.proj2 = self.inj2.T

    def __repr__(self):
        return "BlockSplit(%d, %s, %s)" % (
            self.dim, list(self.first), list(self.second))


def injection(dim, indices):
    """The dim x len(indices) matrix sending the k-th block coordinate to
    slot indices[k] of the ambient space."""
    indices = np.asarray(indices, dtype=int)
    e = np.zeros((dim, len(indices)))
    e[indices, np.arange(len(indices))] = 1.0
    return e


def indicator_diag(dim, indices):
    """Diagonal 0/1 matrix supported on the given ambient indices."""
    d = np.zeros(dim)
    d[np.asarray(indices, dtype=int)] = 1.0
    return np.diag(d)


def spectrum(a):
    """Complex eigenvalues of a square matrix, with multiplicity."""
    return np.linalg.eigvals(_check_square(a))


def skew_residual(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m + m.T))) if m.size else 0.0


def sym_residual(m):
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


_PERM_SIGNS = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
               ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)]


def alternating_residual(t):
    """How far a 3-tensor is from being totally antisymmetric."""
    t = np.asarray(t)
    return float(max(np.max(np.abs(np.transpose(t, p) - s * t))
                     for p, s in _PERM_SIGNS))


def antisymmetrize3(t):
    """Project a 3-tensor onto its totally antisymmetric part.

    The result is alternating exactly as stored (every entry is copied from
    the representative with increasing indices), so exact round-trip
    identities downstream are safe.  Input that is already exactly
    alternating is returned unchanged.
    """
    t = np.asarray(t, dtype=float)
    if all(np.array_equal(np.transpose(t, p), s * t) for p, s in _PERM_SIGNS):
        return t.copy()
    raw = sum(s * np.transpose(t, p) for p, s in _PERM_SIGNS) / 6.0
    out = np.zeros_like(raw)
    n = t.shape[0]
    for a in range(n):
        for b in range(a + 1, n):
            for k in range(b + 1, n):
                v = raw[a, b, k]
                out[a, b, k] = out[b, k, a] = out[k, a, b] = v
                out[b, a, k] = out[a, k, b] = out[k, b, a] = -v
    return out


def entire_series_apply(coeffs, a, radius=np.inf):
    """Evaluate sum_k coeffs[k] a^k by direct summation.

    Truncates once the operator-norm bound on the tail falls below
    SERIES_TRUNC_TOL * (1 + |result|).  For a series with finite convergence
    radius the spectral radius of a must stay below RADIUS_GUARD * radius.
    """
    a = _check_square(a)
    coeffs = np.asarray(coeffs, dtype=float)
    if np.isfinite(radius):
        rho = float(np.max(np.abs(np.linalg.eigvals(a)))) if a.size else 0.0
        if rho >= RADIUS_GUARD * radius:
            raise RadiusExceeded(
                "spectral radius %.6g not below %.2f * radius %.6g"
                % (rho, RADIUS_GUARD, radius))
    # suffix[k] = max_{j >= k} |c_j|, for the tail bound
    suffix = np.maximum.accumulate(np.abs(coeffs)[::-1])[::-1]
    n = a.shape[0]
    result = np.zeros_like(a, dtype=np.result_type(a, float))
    power = np.eye(n, dtype=result.dtype)
    for k in range(len(coeffs)):
        if coeffs[k] != 0.0:
            result = result + coeffs[k] * power
        if k + 1 >= len(coeffs):
            break
        if suffix[k + 1] == 0.0:
            return assert_finite(result)
        power = power @ a
        pnorm = np.linalg.norm(power, 2)
        if pnorm > POWER_OVERFLOW_LIMIT:
            raise EvaluationFailed("matrix powers overflow in series evaluation")
        if suffix[k + 1] * pnorm <= SERIES_TRUNC_TOL * (1.0 + np.linalg.norm(result, 2)):
            return assert_finite(result)
    raise EvaluationFailed("series did not converge within %d terms" % len(coeffs))


# ---------------------------------------------------------------------------
# Taylor coefficient tables.  Everything is expanded at 0.  The families with
# poles on the imaginary axis are generated through zeta(2m), which keeps the
# coefficients stable far beyond where raw Bernoulli numbers overflow:
#
#   coth z - 1/z      = sum_{m>=1} (-1)^{m+1} 2 zeta(2m)/pi^{2m} z^{2m-1}
#   tanh z            = sum_{m>=1} (-1)^{m+1} 2 (4^m-1) zeta(2m)/pi^{2m} z^{2m-1}
#   z/sinh z          = 1 + sum_{m>=1} (-1)^m 2 (4^m-2) zeta(2m)/(2 pi)^{2m} z^{2m}
#   1/z - 1/sinh z    = sum_{m>=1} (-1)^{m+1} 2 (4^m-2) zeta(2m)/(2 pi)^{2m} z^{2m-1}
# ---------------------------------------------------------------------------

_ENTIRE_TERMS = 220
_POLE_TERMS = 1200


def _entire_coeffs(term):
    c = np.zeros(_ENTIRE_TERMS)
    for k in range(_ENTIRE_TERMS):
        c[k] = term(k)
    return c


def _inv_factorial(k):
    try:
        return 1.0 / math.factorial(k)
    except OverflowError:
        return 0.0


EXP_COEFFS = _entire_coeffs(_inv_factorial)
# (1 - e^{-z})/z
DEXP_COEFFS = _entire_coeffs(lambda k: (-1.0) ** k * _inv_factorial(k + 1))
# (e^z - 1)/z
EXPM1_OVER_COEFFS = _entire_coeffs(lambda k: _inv_factorial(k + 1))
SINH_COEFFS = _entire_coeffs(lambda k: _inv_factorial(k) if k % 2 == 1 else 0.0)
COSH_COEFFS = _entire_coeffs(lambda k: _inv_factorial(k) if k % 2 == 0 else 0.0)
# sinh(z)/z
SINHC_COEFFS = _entire_coeffs(lambda k: _inv_factorial(k + 1) if k % 2 == 0 else 0.0)
# (sinh z - z)/z^2
SINH_REM_COEFFS = _entire_coeffs(
    lambda k: _inv_factorial(k + 2) if k % 2 == 1 else 0.0)


def _pole_coeffs(odd, factor):
    """Coefficient table c[k] with c nonzero on odd (or even) k only,
    value (-1)^{m+1} * 2 * factor(m) * zeta(2m), m the family index."""
    c = np.zeros(_POLE_TERMS)
    for m in range(1, _POLE_TERMS // 2 + 1):
        k = 2 * m - 1 if odd else 2 * m
        if k >= _POLE_TERMS:
            break
        c[k] = (-1.0) ** (m + 1) * 2.0 * factor(m) * zeta(2 * m)
    return c


F_COEFFS = _pole_coeffs(True, lambda m: np.pi ** (-2.0 * m))
TANH_COEFFS = _pole_coeffs(
    True, lambda m: (4.0 / np.pi ** 2) ** m - np.pi ** (-2.0 * m))
TRIV_REM_COEFFS = _pole_coeffs(
    True, lambda m: np.pi ** (-2.0 * m) - 2.0 * (2.0 * np.pi) ** (-2.0 * m))
INV_SINHC_COEFFS = -_pole_coeffs(
    False, lambda m: np.pi ** (-2.0 * m) - 2.0 * (2.0 * np.pi) ** (-2.0 * m))
INV_SINHC_COEFFS[0] = 1.0


def _dist_to_ipi_nonzero(w):
    """Distance from each eigenvalue to { i pi k : k integer, k != 0 }."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    k = np.rint(w.imag / np.pi)
    k_up = np.where(k == 0, 1.0, k)
    k_dn = np.where(k == 0, -1.0, k)
    return np.minimum(np.abs(w - 1j * np.pi * k_up),
                      np.abs(w - 1j * np.pi * k_dn))


def _dist_to_ipi_half(w):
    """Distance to { i pi (k + 1/2) : k integer } (poles of tanh)."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    k = np.rint(w.imag / np.pi - 0.5)
    return np.abs(w - 1j * np.pi * (k + 0.5))


class AnalyticFunction:
    """A scalar analytic function packaged for the matrix functional calculus.

    Carries the Taylor table at 0 with its convergence radius, a closed-form
    complex evaluator used away from 0, and the scalar derivative (for the
    divided-difference matrices of the Frechet derivative).  `apply` prefers
    the eigendecomposition route and falls back to the series; when both
    routes are available their results are cross-checked.
    """

    def __init__(self, name, coeffs, radius, fz, dfz, singular_distance=None):
        self.name = name
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.radius = float(radius)
        self._fz = fz
        self._dfz = dfz
        self._singular_distance = singular_distance
        self._poly = self.coeffs[:SCALAR_SERIES_TERMS][::-1]
        dc = self.coeffs[1:] * np.arange(1, len(self.coeffs))
        self._dpoly = dc[:SCALAR_SERIES_TERMS][::-1]

    def __repr__(self):
        return "AnalyticFunction(%r)" % self.name

    def f(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        small = np.abs(z) < SCALAR_SERIES_CUTOFF
        zsafe = np.where(small, 1.0, z)
        return np.where(small, np.polyval(self._poly, z), self._fz(zsafe))

    def df(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        small = np.abs(z) < SCALAR_SERIES_CUTOFF
        zsafe = np.where(small, 1.0, z)
        return np.where(small, np.polyval(self._dpoly, z), self._dfz(zsafe))

    def _check_singularities(self, w):
        if self._singular_distance is not None:
            d = float(np.min(self._singular_distance(w)))
            if d < SINGULAR_SET_TOL:
                raise SpectrumOnSingularSet(
                    "%s: eigenvalue within %.3g of a singularity" % (self.name, d))

    def _eig_route(self, a):
        w, v = np.linalg.eig(a)
        if np.linalg.cond(v) >= EIG_COND_LIMIT:
            return None
        fa = (v * self.f(w)) @ np.linalg.inv(v)
        return self._realify(a, fa)

    def _series_route(self, a):
        try:
            return entire_series_apply(self.coeffs, a, radius=self.radius)
        except RadiusExceeded:
            return None

    @staticmethod
    def _realify(a, fa):
        if np.isrealobj(a):
            scale = 1.0 + np.linalg.norm(fa)
            if np.max(np.abs(fa.imag)) > 1e-8 * scale:
                raise EvaluationFailed("unexpected imaginary part in real matrix function")
            return fa.real
        return fa

    def apply(self, a):
        a = _check_square(np.asarray(a, dtype=float))
        w = np.linalg.eigvals(a) if a.size else np.zeros(0, dtype=complex)
        self._check_singularities(w)
        r_eig = self._eig_route(a)
        r_ser = self._series_route(a)
        if r_eig is None and r_ser is None:
            raise EvaluationFailed(
                "%s: matrix is not reliably diagonalizable and the series "
                "radius check failed" % self.name)
        if r_eig is not None and r_ser is not None:
            diff = np.linalg.norm(r_eig - r_ser, 2)
            if diff > CROSS_CHECK_TOL * (1.0 + np.linalg.norm(r_ser, 2)):
                raise EvaluationFailed(
                    "%s: eigen and series evaluators disagree by %.3g"
                    % (self.name, diff))
        out = r_eig if r_eig is not None else r_ser
        return assert_finite(out)

    def frechet(self, a, e):
        """Directional derivative D f(a)[e], exact up to roundoff.

        Eigen route: Daleckii-Krein divided differences.  Fallback: series
        evaluation on the block-triangular [[a, e], [0, a]], whose top-right
        block is the termwise derivative of the series.
        """
        a = _check_square(np.asarray(a, dtype=float))
        e = np.asarray(e, dtype=float)
        if e.shape != a.shape:
            raise NonSquare("direction shape %s != matrix shape %s" % (e.shape, a.shape))
        w0 = np.linalg.eigvals(a) if a.size else np.zeros(0, dtype=complex)
        self._check_singularities(w0)
        w, v = np.linalg.eig(a)
        if np.linalg.cond(v) < EIG_COND_LIMIT:
            vinv = np.linalg.inv(v)
            dd = self._divided_differences(w)
            out = v @ ((vinv @ e @ v) * dd) @ vinv
            return assert_finite(self._realify(a, out))
        n = a.shape[0]
        big = np.zeros((2 * n, 2 * n))
        big[:n, :n] = a
        big[:n, n:] = e
        big[n:, n:] = a
        try:
            fa = entire_series_apply(self.coeffs, big, radius=self.radius)
        except RadiusExceeded as exc:
            raise EvaluationFailed(
                "%s: no applicable route for the Frechet derivative" % self.name) from exc
        return assert_finite(fa[:n, n:])

    def _divided_differences(self, w):
        scale = 1.0 + float(np.max(np.abs(w))) if w.size else 1.0
        dw = w[:, None] - w[None, :]
        close = np.abs(dw) < DD_CLOSE_TOL * scale
        fw = self.f(w)
        num = fw[:, None] - fw[None, :]
        mid = 0.5 * (w[:, None] + w[None, :])
        quot = np.where(close, 1.0, num / np.where(close, 1.0, dw))
        return np.where(close, self.df(mid.ravel()).reshape(mid.shape), quot)


def _coth(z):
    return np.cosh(z) / np.sinh(z)


EXP = AnalyticFunction("exp", EXP_COEFFS, np.inf, np.exp, np.exp)

DEXP_FACTOR = AnalyticFunction(
    "(1-exp(-z))/z", DEXP_COEFFS, np.inf,
    lambda z: (1.0 - np.exp(-z)) / z,
    lambda z: (np.exp(-z) * (z + 1.0) - 1.0) / z ** 2)

EXPM1_OVER = AnalyticFunction(
    "(exp(z)-1)/z", EXPM1_OVER_COEFFS, np.inf,
    lambda z: np.expm1(z) / z,
    lambda z: (np.exp(z) * (z - 1.0) + 1.0) / z ** 2)

SINH = AnalyticFunction("sinh", SINH_COEFFS, np.inf, np.sinh, np.cosh)

COSH = AnalyticFunction("cosh", COSH_COEFFS, np.inf, np.cosh, np.sinh)

SINHC = AnalyticFunction(
    "sinh(z)/z", SINHC_COEFFS, np.inf,
    lambda z: np.sinh(z) / z,
    lambda z: (z * np.cosh(z) - np.sinh(z)) / z ** 2)

SINH_REM = AnalyticFunction(
    "(sinh(z)-z)/z^2", SINH_REM_COEFFS, np.inf,
    lambda z: (np.sinh(z) - z) / z ** 2,
    lambda z: (np.cosh(z) - 1.0) / z ** 2 - 2.0 * (np.sinh(z) - z) / z ** 3)

F_MEROMORPHIC = AnalyticFunction(
    "coth(z)-1/z", F_COEFFS, np.pi,
    lambda z: _coth(z) - 1.0 / z,
    lambda z: 1.0 / z ** 2 - 1.0 / np.sinh(z) ** 2,
    singular_distance=_dist_to_ipi_nonzero)

TANH = AnalyticFunction(
    "tanh", TANH_COEFFS, np.pi / 2.0,
    np.tanh,
    lambda z: 1.0 / np.cosh(z) ** 2,
    singular_distance=_dist_to_ipi_half)

INV_SINHC = AnalyticFunction(
    "z/sinh(z)", INV_SINHC_COEFFS, np.pi,
    lambda z: z / np.sinh(z),
    lambda z: (np.sinh(z) - z * np.cosh(z)) / np.sinh(z) ** 2,
    singular_distance=_dist_to_ipi_nonzero)

TRIV_REM = AnalyticFunction(
    "1/z-1/sinh(z)", TRIV_REM_COEFFS, np.pi,
    lambda z: 1.0 / z - 1.0 / np.sinh(z),
    lambda z: np.cosh(z) / np.sinh(z) ** 2 - 1.0 / z ** 2,
    singular_distance=_dist_to_ipi_nonzero)


def matfun_F(a):
    """F(a) for F(z) = coth(z) - 1/z, with F(0) = 0 on kernel directions.

    Eigendecomposition route when the eigenvector matrix is well conditioned,
    Bernoulli-type series otherwise; cross-checked whenever both apply.
    Raises SpectrumOnSingularSet when an eigenvalue sits within
    SINGULAR_SET_TOL of i*pi*k, k a nonzero integer.
    """
    return F_MEROMORPHIC.apply(a)


def dexp_factor(x, algebra):
    """The entire factor (1 - e^{-ad_x})/ad_x of the differential of exp."""
    return DEXP_FACTOR.apply(algebra.ad_matrix(x))


def offdiag_inverse_identity_residual(f, split):
    """Residual of the two expressions for the off-diagonal block of an
    automorphism inverse:  (p f i)^{-1} p f i'  vs  -p f^{-1} i' (p' f^{-1} i')^{-1}.

    Both diagonal blocks must be safely invertible (condition number below
    BLOCK_COND_LIMIT), else SingularBlock is raised.
    """
    f = _check_square(np.asarray(f, dtype=float))
    if f.shape[0] != split.dim:
        raise NonSquare("matrix dimension does not match the split")
    finv = np.linalg.inv(f)
    d1 = split.proj1 @ f @ split.inj1
    d2 = split.proj2 @ finv @ split.inj2
    for name, d in (("p f i", d1), ("p' f^-1 i'", d2)):
        if np.linalg.cond(d) >= BLOCK_COND_LIMIT:
            raise SingularBlock("block %s is numerically singular" % name)
    lhs = np.linalg.solve(d1, split.proj1 @ f @ split.inj2)
    rhs = -(split.proj1 @ finv @ split.inj2) @ np.linalg.inv(d2)
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0


def d_ad_power(x, u, v, n, algebra):
    """Exact directional derivative of x -> ad_x^n v in direction u:

        sum_{i=0}^{n-1} C(n, i+1) [ad_x^i u, ad_x^{n-i-1} v].
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    adx = algebra.ad_matrix(x)
    au = [np.asarray(u, dtype=float)]
    av = [np.asarray(v, dtype=float)]
    for _ in range(n - 1):
        au.append(adx @ au[-1])
        av.append(adx @ av[-1])
    out = np.zeros(len(au[0]))
    for i in range(n):
        out = out + math.comb(n, i + 1) * algebra.bracket(au[i], av[n - 1 - i])
    return out


def finite_diff(field, p, direction, step=None):
    """Central difference (field(p + h d) - field(p - h d)) / 2h.

    The default step is cbrt(eps) * (1 + |p|).  Any DomainViolation raised
    by the evaluator (including domain errors of dynamical fields, which
    subclass it) propagates.
    """
    p = np.asarray(p, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if step is None:
        step = CBRT_EPS * (1.0 + np.linalg.norm(p))
    fp = np.asarray(field(p + step * direction), dtype=float)
    fm = np.asarray(field(p - step * direction), dtype=float)
    return (fp - fm) / (2.0 * step)
