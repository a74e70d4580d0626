"""Counting statistics, fringe fits and expectation-value estimates.

Count rates are read off least-squares fits of ``A + B cos(chi + phi)`` to
each chi scan, combined into the joint-measurement and Bell-discrimination
estimators, and summed into the reduced contextuality inequality (bound 1).

Simulated counts are Poisson with mean ``relative_intensity * flux * exposure``
where the relative intensity is the detection probability divided by 1/4,
the mean of a joint-context fringe; ``flux * exposure`` is therefore the
expected number of counts at the fringe mean of a joint scan.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from neutron_ks.algebra import StateVector
from neutron_ks.errors import (
    DegenerateDesign,
    InsufficientData,
    InvalidRate,
    LabelMismatch,
    MissingContext,
    ZeroTotal,
)
from neutron_ks.interferometer import (
    InstrumentConfig,
    MeasurementContext,
    scan_probability,
    standard_scans,
)

DEFAULT_FLUX_EXPOSURE = 2e4
DEFAULT_POINTS = 16
DEFAULT_PERIODS = 2
JOINT_MEAN_PROBABILITY = 0.25
TERMS = ("xx", "yy", "bell")
OBSERVABLE_NAMES = {
    "xx": "σx^s·σx^p",
    "yy": "σy^s·σy^p",
    "bell": "σx^sσy^p·σy^sσx^p",
}
# Streams per scan; point i of scan k draws from stream k * STREAM_STRIDE + i.
STREAM_STRIDE = 1000


class FitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CountRecord:
    context: str
    alpha: float
    chi: float
    rotator: str
    counts: float
    exposure: float = 1.0

    def __post_init__(self):
        if not self.counts >= 0:
            raise ValueError(f"counts must be >= 0, got {self.counts}")
        if not self.exposure > 0:
            raise ValueError(f"exposure must be > 0, got {self.exposure}")

    @property
    def rate(self) -> float:
        return self.counts / self.exposure


def simulate_counts(
    ideal_rate: float,
    flux: float,
    exposure: float,
    seed: int,
    stream: int = 0,
    *,
    context: str = "joint_xx_yy",
    alpha: float = 0.0,
    chi: float = 0.0,
    rotator: str = "pi_half",
) -> CountRecord:
    """Draw one Poisson count with mean ``ideal_rate * flux * exposure``.

    ``(seed, stream)`` fully determines the draw; distinct streams under one
    seed are statistically independent.
    """
    if ideal_rate < 0 or not math.isfinite(ideal_rate):
        raise InvalidRate(f"ideal rate must be finite and >= 0, got {ideal_rate}")
    if flux <= 0 or exposure <= 0:
        raise ValueError("flux and exposure must be positive")
    rng = np.random.default_rng([seed, stream])
    counts = int(rng.poisson(ideal_rate * flux * exposure))
    return CountRecord(context, alpha, chi, rotator, counts, exposure)


# Fringe fitting ----------------------------------------------------------


@dataclass(frozen=True)
class FringeFit:
    offset_A: float
    amplitude_B: float
    phase_phi: float
    covariance: np.ndarray
    chi_squared: float
    dof: int
    linear_params: np.ndarray = field(repr=False)
    linear_covariance: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def contrast(self) -> float:
        return self.amplitude_B / self.offset_A if self.offset_A > 0 else float("nan")

    def curve(self, chi):
        a, c, s = self.linear_params
        return a + c * np.cos(chi) + s * np.sin(chi)

    def to_dict(self) -> dict:
        return {
            "offset_A": self.offset_A,
            "amplitude_B": self.amplitude_B,
            "phase_phi": self.phase_phi,
            "covariance": np.asarray(self.covariance).tolist(),
            "chi_squared": self.chi_squared,
            "dof": self.dof,
            "degenerate": self.degenerate,
        }


def _design(chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    return np.column_stack([np.ones_like(chi), np.cos(chi), np.sin(chi)])


def fit_fringe(samples: Sequence[CountRecord]) -> FringeFit:
    """Weighted linear least-squares fit of ``A + B cos(chi + phi)``.

    Fits ``A + C cos chi + S sin chi`` to ``counts / exposure`` with Poisson
    weights ``exposure**2 / max(counts, 1)``; ``B = hypot(C, S)`` and
    ``phi = atan2(-S, C)``. The covariance is the inverse of the weighted
    normal matrix, mapped to ``(A, B, phi)`` to first order.

    When ``B`` vanishes the phase is undefined: it is reported as 0, its
    variance as that of a uniform phase, and ``degenerate`` is set.

    Raises:
        InsufficientData: fewer than 4 samples, fewer than 3 distinct chi, or
            a chi range not exceeding half a period.
        DegenerateDesign: the normal equations are singular (aliased chi).
    """
    if len(samples) < 4:
        raise InsufficientData(f"need at least 4 samples, got {len(samples)}")
    chi = np.array([s.chi for s in samples], dtype=float)
    counts = np.array([s.counts for s in samples], dtype=float)
    exposure = np.array([s.exposure for s in samples], dtype=float)
    if np.unique(chi).size < 3:
        raise InsufficientData("need at least 3 distinct chi values")
    if np.ptp(chi) <= math.pi:
        raise InsufficientData("chi values must span more than half a period")

    y = counts / exposure
    w = exposure**2 / np.maximum(counts, 1.0)
    X = _design(chi)
    normal = X.T @ (w[:, None] * X)
    if np.linalg.cond(normal) > 1e12:
        raise DegenerateDesign("normal equations are singular; chi settings alias")
    lin_cov = np.linalg.inv(normal)
    lin_cov = (lin_cov + lin_cov.T) / 2
    params = lin_cov @ (X.T @ (w * y))
    resid = y - X @ params
    chi2 = float(np.sum(w * resid**2))

    a, c, s = params
    b = math.hypot(c, s)
    degenerate = b <= 1e-12 * max(abs(a), 1.0)
    if degenerate:
        phi = 0.0
        var_b = (lin_cov[1, 1] + lin_cov[2, 2]) / 2
        cov = np.zeros((3, 3))
        cov[0, 0] = lin_cov[0, 0]
        cov[1, 1] = var_b
        cov[2, 2] = math.pi**2 / 3
    else:
        phi = math.atan2(-s, c)
        J = np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, c / b, s / b],
                [0.0, s / b**2, -c / b**2],
            ]
        )
        cov = J @ lin_cov @ J.T
        cov = (cov + cov.T) / 2
    return FringeFit(
        offset_A=float(a),
        amplitude_B=float(b),
        phase_phi=float(phi),
        covariance=cov,
        chi_squared=chi2,
        dof=len(samples) - 3,
        linear_params=params,
        linear_covariance=lin_cov,
        degenerate=degenerate,
    )


def counts_at(fit: FringeFit, chi: float) -> float:
    """Fitted rate at ``chi``; negative values are clipped to 0 with a FitWarning."""
    value = float(fit.curve(chi))
    if value < 0:
        warnings.warn(f"fitted fringe is negative ({value:.3g}) at chi={chi:.4g}; clipped to 0", FitWarning, stacklevel=2)
        return 0.0
    return value


def fitted_covariance(fit: FringeFit, chis: Sequence[float]) -> np.ndarray:
    """Covariance of the fitted curve evaluated at several phases."""
    G = _design(chis)
    return G @ fit.linear_covariance @ G.T


# Expectation estimates ----------------------------------------------------


@dataclass(frozen=True)
class ExpectationEstimate:
    value: float
    std_error: float
    term_label: str

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "term_label": self.term_label}


def _parity_estimate(plus, minus, covariance, term_label: str) -> ExpectationEstimate:
    plus = np.asarray(plus, dtype=float)
    minus = np.asarray(minus, dtype=float)
    if np.any(plus < 0) or np.any(minus < 0):
        raise ValueError("count rates must be nonnegative")
    P, M = plus.sum(), minus.sum()
    total = P + M
    if total <= 0:
        raise ZeroTotal("all four count rates are zero")
    value = (P - M) / total
    grad = np.concatenate([np.full(plus.size, (1 - value) / total), np.full(minus.size, -(1 + value) / total)])
    if covariance is None:
        covariance = np.diag(np.concatenate([plus, minus]))
    var = float(grad @ np.asarray(covariance, dtype=float) @ grad)
    return ExpectationEstimate(float(value), math.sqrt(max(var, 0.0)), term_label)


def expectation_from_counts(
    N_00: float,
    N_pp: float,
    N_p0: float,
    N_0p: float,
    covariance: np.ndarray | None = None,
    term_label: str = "xx",
) -> ExpectationEstimate:
    """Joint spin-path correlation from four count rates.

    Arguments are N(a, c), N(a+pi, c+pi), N(a+pi, c), N(a, c+pi). Errors are
    propagated to first order, treating each input as Poisson (variance N)
    unless a 4x4 ``covariance`` in argument order is given.
    """
    return _parity_estimate((N_00, N_pp), (N_p0, N_0p), covariance, term_label)


def expectation_bell(
    N_phi_plus: float,
    N_phi_minus: float,
    N_varphi_plus: float,
    N_varphi_minus: float,
    covariance: np.ndarray | None = None,
    term_label: str = "bell",
) -> ExpectationEstimate:
    """Product of the two compound observables from Bell-discrimination counts.

    ``phi`` outcomes carry product value +1 and ``varphi`` outcomes -1.
    """
    return _parity_estimate((N_phi_plus, N_phi_minus), (N_varphi_plus, N_varphi_minus), covariance, term_label)


@dataclass(frozen=True)
class InequalityResult:
    terms: tuple[ExpectationEstimate, ExpectationEstimate, ExpectationEstimate]
    lhs: float
    lhs_error: float
    bound: float
    violated: bool
    sigma_distance: float

    def to_dict(self) -> dict:
        return {
            "terms": {t.term_label: t.to_dict() for t in self.terms},
            "lhs": self.lhs,
            "lhs_error": self.lhs_error,
            "bound": self.bound,
            "violated": self.violated,
            "sigma_distance": self.sigma_distance,
        }


def evaluate_inequality(
    xx: ExpectationEstimate,
    yy: ExpectationEstimate,
    bell: ExpectationEstimate,
    bound: float = 1.0,
) -> InequalityResult:
    """``-<xx> - <yy> - <bell>`` against the noncontextual bound.

    The error is the quadrature sum of term errors (independent scans).
    ``violated`` is simply ``lhs > bound``; the significance is reported
    separately as ``sigma_distance``.
    """
    labels = (xx.term_label, yy.term_label, bell.term_label)
    if labels != TERMS:
        raise LabelMismatch(f"expected terms {TERMS}, got {labels}")
    lhs = -xx.value - yy.value - bell.value
    err = math.sqrt(xx.std_error**2 + yy.std_error**2 + bell.std_error**2)
    if err > 0:
        sigma = (lhs - bound) / err
    else:
        sigma = math.copysign(math.inf, lhs - bound) if lhs != bound else 0.0
    return InequalityResult((xx, yy, bell), lhs, err, bound, lhs > bound, sigma)


# Scan simulation and analysis -------------------------------------------


def chi_grid(n_points: int = DEFAULT_POINTS, periods: int = DEFAULT_PERIODS) -> np.ndarray:
    return np.linspace(0.0, 2 * math.pi * periods, n_points, endpoint=False)


def simulate_scans(
    config: InstrumentConfig,
    seed: int,
    flux_exposure: float = DEFAULT_FLUX_EXPOSURE,
    *,
    n_points: int = DEFAULT_POINTS,
    periods: int = DEFAULT_PERIODS,
    state: StateVector | None = None,
    scans: Sequence[MeasurementContext] | None = None,
) -> list[CountRecord]:
    """Poisson counts for every point of every scan, in a fixed order."""
    scans = standard_scans() if scans is None else scans
    grid = chi_grid(n_points, periods)
    records = []
    for k, scan in enumerate(scans):
        probs = np.broadcast_to(scan_probability(scan, grid, config, state), grid.shape)
        for i, (c, p) in enumerate(zip(grid, probs)):
            records.append(
                simulate_counts(
                    float(p) / JOINT_MEAN_PROBABILITY,
                    flux_exposure,
                    1.0,
                    seed,
                    k * STREAM_STRIDE + i,
                    context=scan.id,
                    alpha=scan.alpha,
                    chi=float(c),
                    rotator=scan.rotator,
                )
            )
    return records


def _same_angle(a: float, b: float, tol: float = 1e-6) -> bool:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d) < tol


@dataclass
class AnalysisResult:
    fits: dict[tuple[str, str, float], FringeFit]
    estimates: dict[str, ExpectationEstimate]
    inequality: InequalityResult

    def to_dict(self) -> dict:
        return {
            "fits": [
                {"context": ctx, "rotator": rot, "alpha_rad": alpha, **fit.to_dict()}
                for (ctx, rot, alpha), fit in self.fits.items()
            ],
            "inequality": self.inequality.to_dict(),
        }


def group_scans(records: Sequence[CountRecord]) -> dict[tuple[str, str, float], list[CountRecord]]:
    """Group records by (context, rotator, alpha), keeping first-seen order."""
    groups: dict[tuple[str, str, float], list[CountRecord]] = {}
    for r in records:
        key = next(
            (k for k in groups if k[0] == r.context and k[1] == r.rotator and _same_angle(k[2], r.alpha)),
            (r.context, r.rotator, r.alpha),
        )
        groups.setdefault(key, []).append(r)
    return groups


def fit_scans(records: Sequence[CountRecord]) -> dict[tuple[str, str, float], FringeFit]:
    return {key: fit_fringe(rs) for key, rs in group_scans(records).items()}


def _find_fit(fits, context, rotator, alpha=None) -> FringeFit:
    for (ctx, rot, a), fit in fits.items():
        if ctx == context and rot == rotator and (alpha is None or _same_angle(a, alpha)):
            return fit
    where = f"alpha={alpha:.4g}" if alpha is not None else f"rotator={rotator}"
    raise MissingContext(f"no {context} scan with {where}")


def _joint_term(fits, alpha: float, chi: float, term: str) -> ExpectationEstimate:
    fit_a = _find_fit(fits, "joint_xx_yy", "pi_half", alpha)
    fit_b = _find_fit(fits, "joint_xx_yy", "pi_half", alpha + math.pi)
    chis = (chi, chi + math.pi)
    cov = np.zeros((4, 4))
    # Argument order: N(a,c), N(a+pi,c+pi), N(a+pi,c), N(a,c+pi).
    cov_a = fitted_covariance(fit_a, chis)  # N(a,c), N(a,c+pi)
    cov_b = fitted_covariance(fit_b, (chi + math.pi, chi))  # N(a+pi,c+pi), N(a+pi,c)
    ia, ib = [0, 3], [1, 2]
    cov[np.ix_(ia, ia)] = cov_a
    cov[np.ix_(ib, ib)] = cov_b
    return expectation_from_counts(
        counts_at(fit_a, chi),
        counts_at(fit_b, chi + math.pi),
        counts_at(fit_b, chi),
        counts_at(fit_a, chi + math.pi),
        covariance=cov,
        term_label=term,
    )


def _bell_term(fits) -> ExpectationEstimate:
    fit_off = _find_fit(fits, "bell_discrimination", "off")
    fit_pi = _find_fit(fits, "bell_discrimination", "pi")
    chis = (math.pi / 2, -math.pi / 2)
    cov = np.zeros((4, 4))
    cov[:2, :2] = fitted_covariance(fit_off, chis)
    cov[2:, 2:] = fitted_covariance(fit_pi, chis)
    return expectation_bell(
        counts_at(fit_off, chis[0]),
        counts_at(fit_off, chis[1]),
        counts_at(fit_pi, chis[0]),
        counts_at(fit_pi, chis[1]),
        covariance=cov,
    )


def analyze_records(records: Sequence[CountRecord]) -> AnalysisResult:
    """Fit every scan, read off the extraction phases and test the inequality.

    Raises:
        MissingContext: one of the six required scans is absent.
    """
    fits = fit_scans(records)
    estimates = {
        "xx": _joint_term(fits, 0.0, 0.0, "xx"),
        "yy": _joint_term(fits, math.pi / 2, math.pi / 2, "yy"),
        "bell": _bell_term(fits),
    }
    result = evaluate_inequality(estimates["xx"], estimates["yy"], estimates["bell"])
    return AnalysisResult(fits, estimates, result)


def run_experiment(
    config: InstrumentConfig | None = None,
    seed: int = 0,
    flux_exposure: float = DEFAULT_FLUX_EXPOSURE,
    **kwargs,
) -> AnalysisResult:
    """Simulate all scans and analyse them in one go."""
    config = InstrumentConfig() if config is None else config
    return analyze_records(simulate_scans(config, seed, flux_exposure, **kwargs))
