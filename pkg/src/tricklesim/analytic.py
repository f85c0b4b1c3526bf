"""Steady-state analysis of a single Trickle cell and the multi-cell estimate.

Everything here evaluates the Poisson-surrogate model of the cell's
broadcast process: attempts form a rate-n Poisson process, a broadcast
succeeds when fewer than k broadcasts happened within the last accumulated
gap window, and the resulting inter-transmission times have an explicit
stationary law.  The surrogate is exact in the large-n limit and labels
all outputs "analytic" when compared against simulation.

Conventions: tau_h is the time unit (all gaps are fractions of an
interval), and norm_constant(k=1) is defined as 1 so the moment identity
j! * C_k / C_{k+j} covers k = 1 with the same code path.

Quadrature: scipy's adaptive Gauss-Kronrod via ``quad`` with abs tol 1e-10
and rel tol 1e-8; Gaussian-tailed semi-infinite integrals are truncated
where the exponent n*u^2/(2(1-eta)) reaches 40.  Non-convergence raises
NumericError with the integrand's diagnostics.  Gamma factors of large
half-integer order go through log-Gamma.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .exceptions import NumericError, ParameterError
from .serialize import fmt, write_csv
from .topology import cell_size

__all__ = [
    "AnalyticParams",
    "DensityTable",
    "hazard",
    "norm_constant",
    "log_norm_constant",
    "cdf_t1",
    "joint_density",
    "sum_density",
    "marginal_density",
    "moment",
    "expected_transmissions",
    "expected_transmissions_asymptotic",
    "limit_density_eta0",
    "limit_density_eta0_direct",
    "limit_density_eta_pos",
    "limit_exponential_checks",
    "multicell_estimate",
    "multicell_estimate_asymptotic",
    "stationarity_residual",
    "density_table",
    "cdf_table",
]

ABS_TOL = 1e-10
REL_TOL = 1e-8
EXP_CUTOFF = 40.0
QUAD_LIMIT = 200

# grid resolution for sampled tables, as fractions of the density's natural
# width eta + n^{-1/2}
CDF_STEP_DIVISOR = 200
PDF_STEP_DIVISOR = 600


@dataclass(frozen=True)
class AnalyticParams:
    """Cell parameters the closed forms depend on: k, n and eta.

    eta = 1 is rejected here (every formula carries a 1-eta denominator)
    even though the simulator itself runs fine at eta = 1.
    """

    k: int
    n: int
    eta: float = 0.0

    def __post_init__(self):
        k, n, eta = self.k, self.n, self.eta
        if not (isinstance(k, (int, np.integer)) and not isinstance(k, bool)) or k < 1:
            raise ParameterError(f"k must be an integer >= 1, got {k!r}")
        if isinstance(n, float) and n == int(n):
            object.__setattr__(self, "n", int(n))
            n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise ParameterError(f"cell size n must be an integer >= 1, got {n!r}")
        if not 0.0 <= eta < 1.0:
            raise ParameterError(
                f"eta must lie in [0, 1), got {eta!r} (eta = 1 makes the "
                "1 - eta denominators singular)")

    def bump_k(self, delta: int) -> "AnalyticParams":
        return AnalyticParams(self.k + delta, self.n, self.eta)


def gaussian_cut(n: float, eta: float) -> float:
    """Width at which exp(-n u^2 / (2(1-eta))) falls below e^-EXP_CUTOFF."""
    return math.sqrt(2.0 * EXP_CUTOFF * (1.0 - eta) / n)


def _quad(func, a, b, *, epsabs=ABS_TOL, epsrel=REL_TOL, what="integral"):
    out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel,
                         limit=QUAD_LIMIT, full_output=1)
    if len(out) == 4:
        raise NumericError(
            f"quadrature did not converge for {what}: {out[-1].strip().splitlines()[0]}",
            lower=float(a), upper=float(b),
            estimate=float(out[0]), abserr=float(out[1]))
    return out[0]


def hazard(t: float, nu: float, params: AnalyticParams) -> float:
    """Rate of successful broadcasts at gap age t given prior-gap sum nu.

    Zero while t + nu is still inside the listen-only span; afterwards the
    surviving attempt intensity n(t + nu - eta)/(1 - eta).
    """
    if t < 0 or nu < 0:
        raise ParameterError(f"t and nu must be >= 0, got t={t!r}, nu={nu!r}")
    if t + nu < params.eta:
        return 0.0
    return params.n * (t + nu - params.eta) / (1.0 - params.eta)


def log_norm_constant(params: AnalyticParams) -> float:
    """log C_(k,n) via the finite sum of half-integer Gamma terms.

    1/C is a plateau term eta^(k-1)/(k-1)! plus a binomial sum of
    (2(1-eta)/n)^((i+1)/2) Gamma((i+1)/2) contributions; everything is
    accumulated in log space so large k and n cannot overflow.
    """
    k, n, eta = params.k, params.n, params.eta
    if k == 1:
        return 0.0
    terms = []
    if eta > 0.0:
        terms.append((k - 1) * math.log(eta) - special.gammaln(k))
    for i in range(k - 1):
        e = k - i - 2
        if eta == 0.0 and e > 0:
            continue
        t = -math.log(2.0) - special.gammaln(i + 1) - special.gammaln(k - 1 - i)
        if e > 0:
            t += e * math.log(eta)
        t += 0.5 * (i + 1) * math.log(2.0 * (1.0 - eta) / n)
        t += special.gammaln(0.5 * (i + 1))
        terms.append(t)
    return -float(special.logsumexp(terms))


def norm_constant(params: AnalyticParams, method: str = "sum") -> float:
    """Normalization constant of the stationary joint gap density.

    method="sum" evaluates the closed finite-sum form; method="integral"
    integrates the defining density numerically as an independent check.
    """
    if method == "sum":
        return math.exp(log_norm_constant(params))
    if method != "integral":
        raise ParameterError(f"unknown method {method!r}, want 'sum' or 'integral'")
    k, n, eta = params.k, params.n, params.eta
    if k == 1:
        return 1.0
    cut = gaussian_cut(n, eta)
    inv_fac = math.exp(-special.gammaln(k - 1))
    val = _quad(
        lambda u: (u + eta) ** (k - 2) * inv_fac
        * math.exp(-n * u * u / (2.0 * (1.0 - eta))),
        0.0, cut, epsabs=1e-14, epsrel=1e-12, what="norm constant integral")
    lead = math.exp((k - 1) * math.log(eta) - special.gammaln(k)) if eta > 0 else 0.0
    return 1.0 / (lead + val)


def cdf_t1(t, params: AnalyticParams):
    """CDF of the inter-transmission time at k=1 (closed form)."""
    if params.k != 1:
        raise ParameterError(f"cdf_t1 needs k=1 params, got k={params.k}")
    n, eta = params.n, params.eta
    t = np.asarray(t, dtype=float)
    out = np.where(t < eta, 0.0,
                   1.0 - np.exp(-0.5 * n * (t - eta) ** 2 / (1.0 - eta)))
    return float(out) if out.ndim == 0 else out


def joint_density(t_vec, params: AnalyticParams) -> float:
    """Stationary joint density of the k-1 most recent gaps.

    Depends on the gap vector only through its sum: a plateau C below eta
    and a Gaussian roll-off beyond.
    """
    k, n, eta = params.k, params.n, params.eta
    if k < 2:
        raise ParameterError("joint density needs k >= 2 (no prior gaps at k=1)")
    t_vec = np.asarray(t_vec, dtype=float)
    if t_vec.ndim != 1 or len(t_vec) != k - 1:
        raise ParameterError(
            f"expected {k - 1} gap components for k={k}, got shape {t_vec.shape}")
    if np.any(t_vec < 0):
        raise ParameterError("gap components must be >= 0")
    s = float(np.sum(t_vec))
    c = norm_constant(params)
    if s < eta:
        return c
    return c * math.exp(-0.5 * n * (s - eta) ** 2 / (1.0 - eta))


def sum_density(s: float, params: AnalyticParams) -> float:
    """Density of the sum of the k-1 most recent gaps."""
    k, n, eta = params.k, params.n, params.eta
    if k < 2:
        raise ParameterError("sum density needs k >= 2")
    if s < 0:
        raise ParameterError(f"s must be >= 0, got {s!r}")
    if s == 0.0:
        return norm_constant(params) if k == 2 else 0.0
    log_val = log_norm_constant(params) + (k - 2) * math.log(s) - special.gammaln(k - 1)
    if s >= eta:
        log_val -= 0.5 * n * (s - eta) ** 2 / (1.0 - eta)
    return math.exp(log_val)


def marginal_density(t: float, params: AnalyticParams) -> float:
    """Density of a single stationary inter-transmission time.

    k=1 is the closed-form derivative of cdf_t1; k>=2 integrates the joint
    density over the prior-gap sum with the Gaussian tail truncated at
    exponent EXP_CUTOFF.
    """
    k, n, eta = params.k, params.n, params.eta
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t!r}")
    t = float(t)
    if k == 1:
        if t < eta:
            return 0.0
        return (n * (t - eta) / (1.0 - eta)
                * math.exp(-0.5 * n * (t - eta) ** 2 / (1.0 - eta)))
    c = norm_constant(params)
    lo = max(0.0, eta - t)
    hi = max(lo, eta - t + gaussian_cut(n, eta))
    if hi <= lo:
        return 0.0
    pref = n / (1.0 - eta) * c / math.exp(special.gammaln(k - 1))

    def integrand(v):
        return ((t + v - eta) * v ** (k - 2)
                * math.exp(-0.5 * n * (t + v - eta) ** 2 / (1.0 - eta)))

    val = _quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-10,
                what=f"marginal density at t={t:g}")
    return pref * val


def moment(j: int, params: AnalyticParams) -> float:
    """j-th moment of the inter-transmission time: j! C_(k,n)/C_(k+j,n)."""
    if not isinstance(j, (int, np.integer)) or j < 0:
        raise ParameterError(f"moment order must be an integer >= 0, got {j!r}")
    if j == 0:
        return 1.0
    return math.exp(special.gammaln(j + 1)
                    + log_norm_constant(params)
                    - log_norm_constant(params.bump_k(j)))


def expected_transmissions(params: AnalyticParams) -> float:
    """Mean broadcasts per interval of length tau_h: 1 / E[gap]."""
    return math.exp(log_norm_constant(params.bump_k(1)) - log_norm_constant(params))


def expected_transmissions_asymptotic(params: AnalyticParams) -> float:
    """Large-n expansion of expected_transmissions.

    eta=0 grows like sqrt(2n); eta>0 saturates at k/eta, approached from
    below with a 1/sqrt(n) correction.
    """
    k, n, eta = params.k, params.n, params.eta
    if eta == 0.0:
        return math.sqrt(2.0 * n) * math.exp(
            special.gammaln((k + 1) / 2.0) - special.gammaln(k / 2.0))
    return k / eta - (k / eta ** 2) * math.sqrt(math.pi * (1.0 - eta) / (2.0 * n))


def _check_limit_k(k) -> int:
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise ParameterError(f"limit laws need integer k >= 2, got {k!r}")
    return int(k)


def limit_density_eta0(k: int, t):
    """Scaling limit of the rescaled gap density at eta=0.

    Base cases are 2/sqrt(pi) e^{-t^2} and sqrt(pi) erfc(t); orders 4..12
    come from the two-term recursion, and beyond 12 the recursion's
    subtractive cancellation is too lossy, so the direct integral takes
    over as evaluator of record.
    """
    k = _check_limit_k(k)
    if k > 12:
        return limit_density_eta0_direct(k, t)
    t_arr = np.asarray(t, dtype=float)
    vals = {2: 2.0 / math.sqrt(math.pi) * np.exp(-t_arr ** 2)}
    if k >= 3:
        vals[3] = math.sqrt(math.pi) * special.erfc(t_arr)
    for m in range(4, k + 1):
        ratio = math.exp(special.gammaln(m / 2.0) - special.gammaln((m - 1) / 2.0))
        vals[m] = ((m - 2) / (m - 3) * vals[m - 2]
                   - ratio * 2.0 * t_arr / (m - 3) * vals[m - 1])
    out = vals[k]
    return float(out) if out.ndim == 0 else out


def limit_density_eta0_direct(k: int, t):
    """Independent quadrature form of the eta=0 limit density (k >= 3)."""
    k = _check_limit_k(k)
    if k < 3:
        raise ParameterError("direct form needs k >= 3 (v^(k-3) factor)")
    pref = math.exp(math.log(2.0 * (k - 2)) - special.gammaln((k - 1) / 2.0))
    hi = max(10.0, 3.0 * math.sqrt(k))

    def one(ti: float) -> float:
        val = _quad(lambda v: v ** (k - 3) * math.exp(-(ti + v) ** 2),
                    0.0, hi, epsabs=1e-13, epsrel=1e-11,
                    what=f"limit density (direct) at t={ti:g}")
        return pref * val

    t_arr = np.asarray(t, dtype=float)
    if t_arr.ndim == 0:
        return one(float(t_arr))
    return np.array([one(ti) for ti in t_arr.ravel()]).reshape(t_arr.shape)


def limit_density_eta_pos(k: int, eta: float, t):
    """Large-n gap density for eta>0: Beta(1, k-1) stretched onto [0, eta]."""
    k = _check_limit_k(k)
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta!r}")
    t_arr = np.asarray(t, dtype=float)
    inside = (t_arr >= 0.0) & (t_arr <= eta)
    base = np.where(inside, 1.0 - np.clip(t_arr, 0.0, eta) / eta, 0.0)
    out = np.where(inside, (k - 1) / eta * base ** (k - 2), 0.0)
    return float(out) if out.ndim == 0 else out


def limit_exponential_checks(k: int, n: int, eta: float) -> float:
    """KS distance of the mean-normalized limit gap law from Exp(1).

    For eta>0 the scaled law is k*Beta(1,k-1); for eta=0 it is the
    sqrt(2k)-rescaled eta=0 limit density.  Both are evaluated from the
    limit laws themselves (n only selects the regime the caller is
    approximating), which makes the distance decrease monotonically in k.
    """
    k = _check_limit_k(k)
    if not 0.0 <= eta < 1.0:
        raise ParameterError(f"eta must lie in [0, 1), got {eta!r}")
    if eta > 0.0:
        x = np.linspace(0.0, float(k), 200001)
        f_beta = 1.0 - (1.0 - x / k) ** (k - 1)
        gap = np.max(np.abs(f_beta - (1.0 - np.exp(-x))))
        return float(max(gap, math.exp(-float(k))))
    scale = math.sqrt(2.0 * k)
    ts = np.linspace(0.0, 3.0, 1501)
    dens = limit_density_eta0(k, ts)
    cdf = np.concatenate([[0.0], integrate.cumulative_trapezoid(dens, ts)])
    x = scale * ts
    gap = np.max(np.abs(np.clip(cdf, 0.0, 1.0) - (1.0 - np.exp(-x))))
    tail = 1.0 - float(cdf[-1])
    return float(max(gap, tail))


def multicell_estimate(k: int, side: int, radius: float, eta: float,
                       include_self: bool = True) -> float:
    """Independent-cells estimate of total grid broadcasts per interval.

    Treats each of the side^2 / S(R) broadcasting cells as an isolated
    cell of S(R) nodes.  S(R) counts the broadcaster itself by default;
    include_self=False exposes the other convention for sensitivity
    checks.  Degenerate S(R) < 2 falls back to one broadcast per node.
    """
    s_r = cell_size(side, radius, include_self=include_self)
    if s_r < 2:
        return float(side * side)
    params = AnalyticParams(k, s_r, eta)
    return side * side / s_r * expected_transmissions(params)


def multicell_estimate_asymptotic(k: int, side: int, radius: float,
                                  eta: float) -> float:
    """Large-R closed form of multicell_estimate via S(R) ~ pi R^2."""
    if radius <= 0:
        raise ParameterError(f"radius must be > 0, got {radius!r}")
    if eta == 0.0:
        return (math.sqrt(2.0 / math.pi) * side * side / radius
                * math.exp(special.gammaln((k + 1) / 2.0) - special.gammaln(k / 2.0)))
    return side * side * k / (math.pi * radius ** 2 * eta)


def stationarity_residual(params: AnalyticParams, perturb: float = 1.0) -> float:
    """Fixed-point defect of the claimed stationary gap density.

    Feeds the stationary joint density (as a function of the prior-gap
    sum) through one renewal step (integrate density times hazard times
    survival over the oldest gap) and returns the sup-norm gap from the
    density itself over a (t, prior-sum) grid.  ``perturb`` scales the
    head of the candidate density (sum below eta + n^{-1/2}, covering the
    plateau and the first gaussian shoulder) so tests can verify the
    residual actually detects non-stationary inputs.
    """
    k, n, eta = params.k, params.n, params.eta
    if k < 2:
        raise ParameterError("stationarity check needs k >= 2")
    c = norm_constant(params)
    pcut = eta + 1.0 / math.sqrt(n)

    def q(w: float) -> float:
        base = 1.0 if w < eta else math.exp(-0.5 * n * (w - eta) ** 2 / (1.0 - eta))
        return perturb * base if w < pcut else base

    def g(t: float, w: float) -> float:
        if t + w < eta:
            return 0.0
        lam = n * (t + w - eta) / (1.0 - eta)
        big_lam = 0.5 * n / (1.0 - eta) * (max(t + w - eta, 0.0) ** 2
                                           - max(w - eta, 0.0) ** 2)
        return c * q(w) * lam * math.exp(-big_lam)

    vmax = eta + gaussian_cut(n, eta)

    def rhs(t: float, sigma: float) -> float:
        # split at the integrand kinks (plateau edge and perturbation edge)
        lo = max(sigma, eta - t)
        hi = max(vmax, pcut, lo + 0.1)
        cuts = [lo] + [x for x in (eta, pcut) if lo < x < hi] + [hi]
        return sum(_quad(lambda w: g(t, w), a, b, epsabs=1e-12, epsrel=1e-10,
                         what="stationarity segment")
                   for a, b in zip(cuts, cuts[1:]))

    t_grid = np.linspace(1e-4, eta + math.sqrt(60.0 * (1.0 - eta) / n), 80)
    if k == 2:
        sigmas = [0.0]
    else:
        sigmas = np.linspace(0.0, eta + 1.0 / math.sqrt(n), 4)
    worst = 0.0
    for sigma in sigmas:
        for t in t_grid:
            worst = max(worst, abs(c * q(float(sigma + t)) - rhs(float(t), float(sigma))))
    return worst


@dataclass
class DensityTable:
    """Sampled pdf or cdf curve plus the parameters that produced it."""

    abscissae: np.ndarray
    values: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("pdf", "cdf"):
            raise ParameterError(f"kind must be 'pdf' or 'cdf', got {self.kind!r}")
        if self.abscissae.shape != self.values.shape or self.abscissae.ndim != 1:
            raise ParameterError("abscissae and values must be 1-d and equal length")
        if len(self.abscissae) >= 2 and np.any(np.diff(self.abscissae) <= 0):
            raise ParameterError("abscissae must be strictly increasing")

    def interpolator(self):
        """Piecewise-linear evaluator; cdf tables clamp to [0, last value]."""
        t, v = self.abscissae, self.values
        if self.kind == "cdf":
            return lambda x: np.interp(x, t, v, left=0.0, right=float(v[-1]))
        return lambda x: np.interp(x, t, v, left=0.0, right=0.0)

    def trapezoid_mass(self) -> float:
        return float(np.trapezoid(self.values, self.abscissae))

    def to_csv(self, path) -> None:
        write_csv(path, ["t", "value"],
                  ([fmt(t), fmt(v)] for t, v in zip(self.abscissae, self.values)),
                  sidecar={"kind": self.kind, "points": len(self.abscissae),
                           "params": self.params})


def _default_grid(params: AnalyticParams, divisor: int) -> np.ndarray:
    n, eta = params.n, params.eta
    step = (eta + 1.0 / math.sqrt(n)) / divisor
    hi = eta + gaussian_cut(n, eta) + 2.0 * step
    return np.arange(0.0, hi + step, step)


def density_table(params: AnalyticParams, grid=None) -> DensityTable:
    """Sampled marginal gap density; the default grid spans the support."""
    g = _default_grid(params, PDF_STEP_DIVISOR) if grid is None else np.asarray(grid, float)
    vals = np.array([marginal_density(t, params) for t in g])
    return DensityTable(g, vals, "pdf",
                        {"k": params.k, "n": params.n, "eta": params.eta})


def cdf_table(params: AnalyticParams, grid=None) -> DensityTable:
    """Sampled gap CDF: exact at k=1, cumulative trapezoid of the density otherwise."""
    g = _default_grid(params, CDF_STEP_DIVISOR) if grid is None else np.asarray(grid, float)
    if params.k == 1:
        vals = cdf_t1(g, params)
    else:
        dens = np.array([marginal_density(t, params) for t in g])
        vals = np.concatenate([[0.0], integrate.cumulative_trapezoid(dens, g)])
        vals = np.clip(vals, 0.0, 1.0)
    return DensityTable(g, vals, "cdf",
                        {"k": params.k, "n": params.n, "eta": params.eta})
