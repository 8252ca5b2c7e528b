"""Truncated Fock-space model of a heralded photon meeting a weak coherent state.

Four bosonic modes: spatial ports ``a`` (signal) and ``b`` (LO), each split into
a spectral mode ``m`` that matches the signal and an orthogonal mode ``o``.
Partial distinguishability with overlap amplitude zeta is exact for a coherent
LO: its matched part has amplitude ``zeta*sqrt(mu)`` and its orthogonal part
``sqrt((1 - |zeta|^2) mu)``.

The signal photon number is classically correlated with the idler's, and all
detectors are photon-number diagonal, so every pulse is a mixture over the
number of pairs and each component is a pure four-mode Fock state.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
import math
import os

import numpy as np

from .hom import HomParams, SIGMA_CONVENTION
from .units import C, GaussianSpectrum, UM

MODES = ("am", "ao", "bm", "bo")
STATISTICS = ("single-pair", "thermal")
#: click pattern order of the probability arrays: (herald, D1, D2), 1 = click
PATTERNS = [(h, x, y) for h in (0, 1) for x in (0, 1) for y in (0, 1)]

LEAKAGE_LIMIT = 1e-6
DEFAULT_NMAX = 4
MAX_NMAX = 30


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    """Threshold detector: P(click | n) = 1 - (1 - efficiency)^n (1 - dark_prob)."""

    efficiency: float = 1.0
    dark_prob: float = 0.0

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if not 0 <= self.dark_prob < 1:
            raise ValueError(f"dark-click probability must lie in [0, 1), got {self.dark_prob}")

    def click_probability(self, n):
        n = np.asarray(n)
        return 1.0 - (1.0 - self.efficiency) ** n * (1.0 - self.dark_prob)


@dataclass(frozen=True)
class DetectorSet:
    d1: DetectorModel = field(default_factory=DetectorModel)
    d2: DetectorModel = field(default_factory=DetectorModel)
    herald: DetectorModel = field(default_factory=DetectorModel)

    def swapped(self):
        return DetectorSet(self.d2, self.d1, self.herald)


@dataclass(frozen=True)
class SourceConfig:
    """Per-pulse source parameters.

    ``pair_probability`` is the mean pair number per pulse.  The overlap
    zeta(tau) follows from the signal and LO spectra; ``delta`` overrides
    the centre-frequency difference implied by them (rad/s).
    """

    pair_probability: float = 0.01
    statistics: str = "single-pair"
    herald_efficiency: float = 1.0
    lo_mean_photons: float = 0.02
    signal: GaussianSpectrum = GaussianSpectrum(830.0, 9.3)
    lo: GaussianSpectrum = GaussianSpectrum(830.0, 7.1)
    delta: float = None

    def __post_init__(self):
        if not 0 <= self.pair_probability <= 0.2:
            raise ValueError(f"pair probability must lie in [0, 0.2], got {self.pair_probability}")
        if self.statistics not in STATISTICS:
            raise ValueError(f"statistics must be one of {STATISTICS}, got {self.statistics!r}")
        if not 0 <= self.herald_efficiency <= 1:
            raise ValueError("herald efficiency must lie in [0, 1]")
        if not self.lo_mean_photons >= 0:
            raise ValueError("LO mean photon number must be non-negative")

    def overlap(self, tau):
        return mode_overlap(self.signal, self.lo, tau, self.delta)


def mode_overlap(signal: GaussianSpectrum, lo: GaussianSpectrum, tau, delta=None):
    """Overlap amplitude zeta between the signal mode and the delayed LO mode.

    ``|zeta|^2 = 2 s_s s_L / (s_s^2 + s_L^2) * exp(-(s_s^2 s_L^2 tau^2 + 4 delta^2) / (2 (s_s^2 + s_L^2)))``
    so that a one-photon/one-photon coincidence reproduces the analytic dip.
    The phase is fixed to zero.
    """
    p = HomParams.from_spectra(signal, lo, SIGMA_CONVENTION)
    if delta is not None:
        p = HomParams(p.sigma_s, p.sigma_l, delta)
    ss, sl = p.sigma_s**2, p.sigma_l**2
    tau = np.asarray(tau, dtype=float)
    z2 = 2.0 * p.sigma_s * p.sigma_l / (ss + sl) * np.exp(
        -(ss * sl * tau**2 + 4.0 * p.delta**2) / (2.0 * (ss + sl))
    )
    return np.sqrt(np.clip(z2, 0.0, 1.0))


class FockState:
    """Pure state over (am, ao, bm, bo) stored as a dense tensor with per-mode cutoff."""

    def __init__(self, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.ndim != 4 or len(set(amplitudes.shape)) != 1:
            raise ValueError("FockState needs a (d, d, d, d) amplitude tensor")
        self.amplitudes = amplitudes

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    @property
    def cutoff(self):
        return self.dim - 1

    @classmethod
    def product(cls, single_mode_amplitudes, dim):
        """Tensor product of four single-mode amplitude vectors (padded to ``dim``)."""
        vecs = []
        for v in single_mode_amplitudes:
            v = np.asarray(v, dtype=complex)
            if v.size > dim:
                raise ValueError("single-mode vector longer than the cutoff dimension")
            vecs.append(np.pad(v, (0, dim - v.size)))
        return cls(np.einsum("i,j,k,l->ijkl", *vecs))

    @classmethod
    def fock(cls, occupations, dim):
        amps = np.zeros((dim,) * 4, dtype=complex)
        amps[tuple(occupations)] = 1.0
        return cls(amps)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def port_number_distribution(self):
        """P(n1, n2) of total photon numbers in port a (= am + ao) and port b (= bm + bo)."""
        probs = np.abs(self.amplitudes) ** 2
        d = self.dim
        out = np.zeros((2 * d - 1, 2 * d - 1))
        for i in range(d):
            for k in range(d):
                # probs[i, :, k, :] has n1 = i + j, n2 = k + l
                block = probs[i, :, k, :]
                out[i : i + d, k : k + d] += block
        return out


def _coherent_amplitudes(alpha, n_max):
    n = np.arange(n_max + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mu = abs(alpha) ** 2
    if mu == 0:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[0] = 1.0
        return amps, 0.0
    mags = np.exp(-mu / 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
    phase = np.exp(1j * n * np.angle(alpha))
    amps = mags * phase
    leakage = max(0.0, 1.0 - float(np.sum(mags**2)))
    return amps, leakage


def poisson_tail(mu, n_max):
    """Probability of more than ``n_max`` photons in a coherent state of mean ``mu``."""
    if mu == 0:
        return 0.0
    # sum the tail directly to avoid cancellation in 1 - sum(head)
    total, term, k = 0.0, math.exp(-mu + (n_max + 1) * math.log(mu) - math.lgamma(n_max + 2)), n_max + 1
    while term > 1e-300 and (total == 0 or term > 1e-18 * total):
        total += term
        k += 1
        term *= mu / k
    return total


def pair_distribution(source: SourceConfig, statistics, n_max):
    """Pair-number weights 0..n_max and the discarded tail probability."""
    p = source.pair_probability
    if statistics == "single-pair":
        # at most one pair per pulse
        return np.array([1.0 - p, p] + [0.0] * (n_max - 1))[: n_max + 1], 0.0
    n = np.arange(n_max + 1)
    weights = p**n / (1.0 + p) ** (n + 1)
    tail = (p / (1.0 + p)) ** (n_max + 1)
    return weights, tail


def truncation_leakage(source: SourceConfig, statistics, zeta, n_max):
    mu = source.lo_mean_photons
    z2 = min(abs(zeta) ** 2, 1.0)
    return (
        pair_distribution(source, statistics, n_max)[1]
        + poisson_tail(z2 * mu, n_max)
        + poisson_tail((1.0 - z2) * mu, n_max)
    )


def choose_cutoff(source: SourceConfig, statistics, zeta=1.0):
    """Smallest per-mode truncation >= 4 keeping the discarded mass below 1e-6."""
    for n_max in range(DEFAULT_NMAX, MAX_NMAX + 1):
        if max(truncation_leakage(source, statistics, z, n_max) for z in (zeta, 0.0, 1.0)) < LEAKAGE_LIMIT:
            return n_max
    raise TruncationError(f"no truncation up to {MAX_NMAX} photons per mode keeps leakage below {LEAKAGE_LIMIT}")


@dataclass
class MixtureComponent:
    weight: float
    pairs: int
    state: FockState


def prepare_input(source: SourceConfig, zeta, heralded=True, n_max=None):
    """Beam-splitter input as a list of (weight, pair number, FockState).

    Port a holds ``pairs`` photons in the matched mode; port b the coherent LO
    split into matched/orthogonal parts.  ``heralded=False`` always uses the
    thermal pair statistics (the unheralded signal is a thermal mode).  The
    per-mode truncation is chosen automatically unless ``n_max`` is given; in
    both cases the discarded probability must stay below 1e-6.  The tensor
    dimension is ``2*n_max + 1`` so a beam splitter never leaves the space.
    """
    statistics = source.statistics if heralded else "thermal"
    zeta = complex(zeta)
    if abs(zeta) > 1 + 1e-12:
        raise ValueError("overlap amplitude must lie in the unit disc")
    if n_max is None:
        n_max = choose_cutoff(source, statistics, abs(zeta))
    leakage = truncation_leakage(source, statistics, zeta, n_max)
    if leakage >= LEAKAGE_LIMIT:
        raise TruncationError(
            f"truncation at {n_max} photons per mode discards {leakage:.3g} probability "
            f"(limit {LEAKAGE_LIMIT}); raise n_max or lower mu / p"
        )
    mu = source.lo_mean_photons
    z2 = min(abs(zeta) ** 2, 1.0)
    lo_m, _ = _coherent_amplitudes(zeta / abs(zeta) * math.sqrt(z2 * mu) if zeta != 0 else 0.0, n_max)
    lo_o, _ = _coherent_amplitudes(math.sqrt((1.0 - z2) * mu), n_max)
    lo_m /= np.linalg.norm(lo_m)
    lo_o /= np.linalg.norm(lo_o)

    weights, _ = pair_distribution(source, statistics, n_max)
    weights = weights / weights.sum()
    dim = 2 * n_max + 1
    vacuum = np.array([1.0])
    mixture = []
    for n, w in enumerate(weights):
        if w == 0:
            continue
        signal = np.zeros(n + 1)
        signal[n] = 1.0
        mixture.append(MixtureComponent(float(w), n, FockState.product([signal, vacuum, lo_m, lo_o], dim)))
    return mixture


@lru_cache(maxsize=64)
def _beam_splitter_matrix(dim, transmittance):
    """Two-mode unitary on the (n_a, n_b) space, n_a + n_b < dim, flattened as a*dim + b.

    a^dag -> sqrt(T) c^dag + sqrt(R) d^dag, b^dag -> -sqrt(R) c^dag + sqrt(T) d^dag.
    """
    t, r = math.sqrt(transmittance), math.sqrt(1.0 - transmittance)
    u = np.zeros((dim * dim, dim * dim))
    fact = [math.factorial(k) for k in range(dim)]
    for n in range(dim):
        for k in range(n + 1):  # input |k, n - k>
            # polynomial in c^dag: (t c + r d)^k (-r c + t d)^(n-k), coefficient of c^j d^(n-j)
            poly_a = np.array([math.comb(k, j) * t**j * r ** (k - j) for j in range(k + 1)])
            poly_b = np.array([math.comb(n - k, j) * (-r) ** j * t ** (n - k - j) for j in range(n - k + 1)])
            coeffs = np.convolve(poly_a, poly_b)
            scale = 1.0 / math.sqrt(fact[k] * fact[n - k])
            for j in range(n + 1):
                u[j * dim + (n - j), k * dim + (n - k)] = coeffs[j] * scale * math.sqrt(fact[j] * fact[n - j])
    return u


def beam_splitter(state: FockState, transmittance=0.5):
    """Apply the same two-port splitter to the matched (am, bm) and orthogonal (ao, bo) modes.

    Output axes keep the names (am, ao, bm, bo): port ``a`` goes to detector
    D1, port ``b`` to D2.
    """
    if not 0 <= transmittance <= 1:
        raise ValueError("transmittance must lie in [0, 1]")
    d = state.dim
    amps = state.amplitudes
    a_idx, b_idx = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    outside = a_idx + b_idx >= d
    if np.any(np.abs(amps[outside[:, None, :, None] & np.ones((1, d, 1, d), bool)]) > 0) or np.any(
        np.abs(amps[outside[None, :, None, :] & np.ones((d, 1, d, 1), bool)]) > 0
    ):
        raise TruncationError("state has support beyond the splitter-closed subspace; enlarge the cutoff")
    u = _beam_splitter_matrix(d, float(transmittance))
    # matched pair: axes (0, 2); orthogonal pair: axes (1, 3)
    psi = np.moveaxis(amps, (0, 2), (0, 1)).reshape(d * d, d * d)
    psi = (u @ psi).reshape(d, d, d, d)
    psi = np.moveaxis(psi, (0, 1), (0, 2))
    psi = np.moveaxis(psi, (1, 3), (0, 1)).reshape(d * d, d * d)
    psi = (u @ psi).reshape(d, d, d, d)
    psi = np.moveaxis(psi, (0, 1), (1, 3))
    return FockState(psi)


def _click_table(detector: DetectorModel, n_max):
    click = detector.click_probability(np.arange(n_max + 1))
    return np.stack([1.0 - click, click])  # [outcome, n]


def click_probabilities(mixture, detectors: DetectorSet, herald_efficiency=1.0, transmittance=0.5):
    """Exact probabilities of the 8 (herald, D1, D2) click patterns, as a (2, 2, 2) array.

    ``mixture`` is the pre-splitter input from :func:`prepare_input`.  The
    herald sees the pair number through ``herald_efficiency`` and its own
    detector efficiency.
    """
    herald = DetectorModel(herald_efficiency * detectors.herald.efficiency, detectors.herald.dark_prob)
    out = np.zeros((2, 2, 2))
    for comp in mixture:
        pn = beam_splitter(comp.state, transmittance).port_number_distribution()
        n = pn.shape[0] - 1
        t1, t2 = _click_table(detectors.d1, n), _click_table(detectors.d2, n)
        pd = t1 @ pn @ t2.T
        ph = _click_table(herald, comp.pairs)[:, comp.pairs]
        out += comp.weight * ph[:, None, None] * pd[None, :, :]
    return out


def pattern_probabilities(source: SourceConfig, detectors: DetectorSet, zeta, heralded=True, n_max=None):
    mixture = prepare_input(source, zeta, heralded=heralded, n_max=n_max)
    return click_probabilities(mixture, detectors, source.herald_efficiency)


def threefold_probability(source: SourceConfig, detectors: DetectorSet, tau, n_max=None):
    """P(herald and D1 and D2) at delay ``tau`` with the source's pair statistics."""
    probs = pattern_probabilities(source, detectors, source.overlap(tau), True, n_max)
    return float(probs[1, 1, 1])


def twofold_probability(source: SourceConfig, detectors: DetectorSet, tau, n_max=None):
    """P(D1 and D2) without heralding; the signal arm is a thermal mode of mean p."""
    probs = pattern_probabilities(source, detectors, source.overlap(tau), False, n_max)
    return float(probs[:, 1, 1].sum())


def dip_visibility(p_zero, p_far):
    """(P(inf) - P(0)) / P(inf)."""
    return (p_far - p_zero) / p_far


def threefold_visibility(source, detectors, zeta0=None, n_max=None):
    zeta0 = source.overlap(0.0) if zeta0 is None else zeta0
    p0 = pattern_probabilities(source, detectors, zeta0, True, n_max)[1, 1, 1]
    pf = pattern_probabilities(source, detectors, 0.0, True, n_max)[1, 1, 1]
    return dip_visibility(p0, pf)


def twofold_visibility(source, detectors, zeta0=None, n_max=None):
    zeta0 = source.overlap(0.0) if zeta0 is None else zeta0
    p0 = pattern_probabilities(source, detectors, zeta0, False, n_max)[:, 1, 1].sum()
    pf = pattern_probabilities(source, detectors, 0.0, False, n_max)[:, 1, 1].sum()
    return dip_visibility(p0, pf)


@dataclass
class CountRecord:
    """Simulated counts per delay point."""

    delays: np.ndarray
    pulses: np.ndarray
    singles_i: np.ndarray
    singles_d1: np.ndarray
    singles_d2: np.ndarray
    doubles_d1d2: np.ndarray
    triples: np.ndarray
    seed: int

    COLUMNS = ("delay_s", "path_um", "pulses", "singles_i", "singles_d1", "singles_d2", "doubles_d1d2", "triples")

    @property
    def path_um(self):
        return C * self.delays / UM

    def rows(self):
        for k in range(self.delays.size):
            yield (
                float(self.delays[k]), float(self.path_um[k]), int(self.pulses[k]), int(self.singles_i[k]),
                int(self.singles_d1[k]), int(self.singles_d2[k]), int(self.doubles_d1d2[k]), int(self.triples[k]),
            )


def thread_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("HOMSIM_THREADS")
    return max(1, int(env)) if env else min(8, os.cpu_count() or 1)


def _simulate_point(source, detectors, tau, pulses, seed, index, n_max):
    probs = pattern_probabilities(source, detectors, source.overlap(tau), True, n_max).reshape(-1)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    counts = rng.multinomial(pulses, probs).reshape(2, 2, 2)
    return (
        counts[1].sum(),
        counts[:, 1, :].sum(),
        counts[:, :, 1].sum(),
        counts[:, 1, 1].sum(),
        counts[1, 1, 1],
    )


def simulate_counts(source: SourceConfig, detectors: DetectorSet, delays, pulses_per_point, seed, threads=None, n_max=None):
    """Monte Carlo click counts at each delay.

    Every delay point draws one multinomial sample over the 8 click patterns
    from its own generator seeded by ``(seed, index)``, so results do not
    depend on the thread count.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or not np.all(np.isfinite(delays)):
        raise ValueError("delays must be a finite 1-D list")
    pulses = int(pulses_per_point)
    if pulses < 0:
        raise ValueError("pulses per point must be non-negative")
    jobs = [(source, detectors, float(t), pulses, int(seed), k, n_max) for k, t in enumerate(delays)]
    workers = thread_count(threads)
    if workers == 1 or len(jobs) < 2:
        results = [_simulate_point(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _simulate_point(*job), jobs))
    table = np.array(results, dtype=np.int64).reshape(len(jobs), 5)
    return CountRecord(
        delays=delays,
        pulses=np.full(delays.size, pulses, dtype=np.int64),
        singles_i=table[:, 0],
        singles_d1=table[:, 1],
        singles_d2=table[:, 2],
        doubles_d1d2=table[:, 3],
        triples=table[:, 4],
        seed=int(seed),
    )
