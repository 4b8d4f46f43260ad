"""Monte Carlo estimation of exRec logical failure rates and pseudo-thresholds.

Every trial runs LEC, the two pieces with the intermediate EC and the TEC
under depolarizing noise, then compares the ideally decoded output with the
ideal CNOT applied to the ideally decoded LEC output.  The simulator records
the syndromes and the *raw* logical error (before any decoder-chosen logical
correction); a decoder only XORs its correction onto that, so any number of
decoders can be scored on the same noise realizations.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exrec import N_TABLEAU, ExRecProgram, run_exrec
from .machines import Depolarizing, FrameMachine, TableauMachine
from .noise import NoiseParams
from .pieceable import TwoBlockCircuit

BATCH = 20000
TABLEAU_BATCH = 500

# circuit-order logical bits (xc, zc, xt, zt) -> two-letter name, control first
_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
ERROR_NAMES = [_LETTER[(b & 1, (b >> 1) & 1)] + _LETTER[((b >> 2) & 1, (b >> 3) & 1)] for b in range(16)]


def error_index(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    return bits[..., 0] | bits[..., 1] << 1 | bits[..., 2] << 2 | bits[..., 3] << 3


# -- record generation -----------------------------------------------------

@dataclass
class Records:
    """Accepted trials: 47 syndrome bits and the raw circuit-order logical error."""

    features: np.ndarray  # (N, 47) uint8: s_lec (20) | s1 (7) | s2 (20)
    raw: np.ndarray       # (N, 4) uint8
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.raw)

    def errors(self, decoder=None) -> np.ndarray:
        """Logical error after ``decoder``'s correction, shape (N, 4)."""
        if decoder is None:
            return self.raw
        f = self.features
        return self.raw ^ decoder.decode(f[:, :20], f[:, 20:27], f[:, 27:])


def _batch(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    circuit, noise, seed_words, size, backend = args
    ss = np.random.SeedSequence(seed_words)
    noise_ss, tab_ss = ss.spawn(2)
    rng = np.random.default_rng(noise_ss)
    prog = ExRecProgram(circuit)
    src = Depolarizing(noise, rng)
    if backend == "frame":
        m = FrameMachine(N_TABLEAU, size, src)
    elif backend == "tableau":
        seeds = tab_ss.generate_state(size, dtype=np.uint32)
        m = TableauMachine(N_TABLEAU, size, src, seeds=seeds)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    r = run_exrec(prog, m)
    return r.features, r.raw, r.accepted


def simulate_records(circuit: TwoBlockCircuit, noise: NoiseParams, n: int, seed: int = 0,
                     stream: int = 0, backend: str = "frame", workers: int = 1,
                     batch: int | None = None) -> Records:
    """``n`` accepted trials; batch ``k`` is seeded by ``(seed, stream, k)``.

    Batches are fixed-size and merged in index order, so results do not
    depend on ``workers``.  Rejected trials are dropped and replaced from
    later batches.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    size = batch or (BATCH if backend == "frame" else TABLEAU_BATCH)
    feats, raws = [], []
    got = rejected = 0
    k = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while got < n:
            need = max(1, math.ceil((n - got) / size))
            wave = [(circuit, noise, [seed, stream, k + i], size, backend) for i in range(min(need, max(workers, 1)))]
            k += len(wave)
            results = pool.map(_batch, wave) if pool else map(_batch, wave)
            for f, r, ok in results:
                rejected += int((~ok).sum())
                feats.append(f[ok])
                raws.append(r[ok])
                got += int(ok.sum())
    finally:
        if pool:
            pool.shutdown()
    if not feats:
        return Records(np.zeros((0, 47), np.uint8), np.zeros((0, 4), np.uint8))
    return Records(np.concatenate(feats)[:n], np.concatenate(raws)[:n], rejected)


# -- single trials and rate estimates --------------------------------------

@dataclass
class ExRecSpec:
    circuit: TwoBlockCircuit
    decoder: object
    noise: NoiseParams
    backend: str = "frame"


@dataclass
class TrialOutcome:
    logical_error: str
    accepted: bool


def run_trial(spec: ExRecSpec, rng: np.random.Generator) -> TrialOutcome:
    """One trial; a rejected trial reports ``accepted=False`` and ``II``."""
    seed = int(rng.integers(2**63))
    f, r, ok = _batch((spec.circuit, spec.noise, [seed], 1, spec.backend))
    if not ok[0]:
        return TrialOutcome("II", False)
    e = Records(f, r).errors(spec.decoder)
    return TrialOutcome(ERROR_NAMES[int(error_index(e)[0])], True)


@dataclass
class RateEstimate:
    epsilon: float
    shots: int
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(self.counts.values())

    @property
    def rate(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    def ci(self, z: float = 1.96) -> tuple[float, float]:
        """Wilson score interval for the total failure rate."""
        n, p = self.shots, self.rate
        if n == 0:
            return 0.0, 1.0
        d = 1 + z * z / n
        mid = (p + z * z / (2 * n)) / d
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d
        return max(0.0, mid - half), min(1.0, mid + half)

    @property
    def sigma(self) -> float:
        """Binomial standard error, floored at one count for empty bins."""
        p = max(self.rate, 1.0 / max(self.shots, 1))
        return math.sqrt(p * (1 - p) / max(self.shots, 1))


def rate_from_errors(epsilon: float, errors: np.ndarray) -> RateEstimate:
    idx = error_index(errors)
    hist = np.bincount(idx, minlength=16)
    return RateEstimate(epsilon, len(errors), {ERROR_NAMES[i]: int(hist[i]) for i in range(1, 16)})


def estimate(spec: ExRecSpec, n: int, seed: int = 0, stream: int = 0, workers: int = 1) -> RateEstimate:
    rec = simulate_records(spec.circuit, spec.noise, n, seed, stream, spec.backend, workers)
    return rate_from_errors(spec.noise.epsilon, rec.errors(spec.decoder))


def estimate_paired(circuit: TwoBlockCircuit, decoders: dict, noise: NoiseParams, n: int, seed: int = 0,
                    stream: int = 0, workers: int = 1, backend: str = "frame") -> dict[str, RateEstimate]:
    """Several decoders scored on the same trials."""
    rec = simulate_records(circuit, noise, n, seed, stream, backend, workers)
    return {name: rate_from_errors(noise.epsilon, rec.errors(d)) for name, d in decoders.items()}


# -- fitting and thresholds ------------------------------------------------

@dataclass
class QuadraticFit:
    """``P(e) = a e^2 + b e + c`` with the parameter covariance."""

    a: float
    b: float
    c: float
    cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        return self.a * eps ** 2 + self.b * eps + self.c

    @property
    def stderr(self) -> tuple[float, float, float]:
        return tuple(float(math.sqrt(max(v, 0.0))) for v in np.diag(self.cov))


def _points(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    eps, p, sig = [], [], []
    for pt in points:
        if isinstance(pt, RateEstimate):
            eps.append(pt.epsilon)
            p.append(pt.rate)
            sig.append(pt.sigma)
        elif len(pt) == 3:
            eps.append(pt[0])
            p.append(pt[1])
            sig.append(pt[2])
        else:
            eps.append(pt[0])
            p.append(pt[1])
            sig.append(1.0)
    return np.array(eps, float), np.array(p, float), np.array(sig, float)


def fit_quadratic(points) -> QuadraticFit:
    """Weighted least squares over ``RateEstimate``s or ``(eps, p[, sigma])`` tuples."""
    eps, p, sig = _points(points)
    if len(eps) < 3:
        raise ValueError("need at least 3 points")
    if np.any(sig <= 0):
        raise ValueError("standard errors must be positive")
    # columns scaled to unit size so the normal equations stay well conditioned
    scale = np.array([eps.max() ** 2, eps.max(), 1.0])
    design = np.stack([eps ** 2, eps, np.ones_like(eps)], axis=1) / scale
    w = 1.0 / sig
    aw = design * w[:, None]
    if np.linalg.matrix_rank(aw) < 3:
        raise ValueError("degenerate design matrix (need 3 distinct epsilon values)")
    coef, *_ = np.linalg.lstsq(aw, p * w, rcond=None)
    cov = np.linalg.inv(aw.T @ aw) / np.outer(scale, scale)
    coef = coef / scale
    return QuadraticFit(float(coef[0]), float(coef[1]), float(coef[2]), cov)


class NoThreshold(ValueError):
    pass


def _line(eps, line: str):
    if line == "eps":
        return eps
    if line == "15/16":
        return 15.0 * eps / 16.0
    raise ValueError(f"unknown line {line!r}")


def pseudo_threshold(fit: QuadraticFit, line: str = "eps") -> float:
    """Smallest root in (0, 1) of ``P(e) = e`` (or ``15e/16`` with ``line="15/16"``)."""
    slope = _line(1.0, line)
    roots = np.roots([fit.a, fit.b - slope, fit.c]) if fit.a != 0 else np.roots([fit.b - slope, fit.c])
    real = sorted(float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and 0 < r.real < 1)
    if not real:
        raise NoThreshold("no pseudo-threshold in range")
    return real[0]


def log_slope(points) -> float:
    """Least-squares slope of log P against log e."""
    eps, p, _ = _points(points)
    if np.any(p <= 0):
        raise ValueError("log slope needs positive rates")
    return float(np.polyfit(np.log(eps), np.log(p), 1)[0])


def swap_rate(p_a, p_b, symmetric: bool = False):
    """Failure probability of the three-CNOT logical SWAP.

    The default is the printed combination ``2 pA (1-pB)(1-pA) + pA (1-pB)^2``;
    ``symmetric=True`` gives the reading where exactly one of the three exRecs
    (A, B, A) fails: ``2 pA (1-pA)(1-pB) + pB (1-pA)^2``.  Only the symmetric
    form is bounded by 1 everywhere (the printed one reaches 1.08 at pA=0.6,
    pB=0); both agree when pA = pB.  Scalar inputs keep their own number
    type, so ``Fraction`` arguments give exact results.
    """
    scalar = np.ndim(p_a) == 0 and np.ndim(p_b) == 0
    if not scalar:
        p_a, p_b = np.asarray(p_a, float), np.asarray(p_b, float)
    if np.any((np.asarray(p_a) < 0) | (np.asarray(p_a) > 1) | (np.asarray(p_b) < 0) | (np.asarray(p_b) > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    if symmetric:
        return 2 * p_a * (1 - p_a) * (1 - p_b) + p_b * (1 - p_a) ** 2
    return 2 * p_a * (1 - p_b) * (1 - p_a) + p_a * (1 - p_b) ** 2


def swap_physical(eps):
    """Failure probability of an unencoded SWAP built from three CNOTs."""
    return 3 * eps * (1 - eps) ** 2


def swap_pseudo_threshold(fit_a, fit_b, symmetric: bool = False, lo: float = 1e-8, hi: float = 1e-1,
                          rtol: float = 1e-3) -> float:
    """Smallest ``e`` in ``[lo, hi]`` where the logical SWAP fails as often as the physical one.

    ``fit_a``/``fit_b`` are callables (e.g. :class:`QuadraticFit`) giving the
    exRec failure rates; they are clipped to [0, 1].  The bracket is scanned on
    a log grid for the first sign change, then bisected.
    """
    def gap(e):
        pa = float(np.clip(fit_a(e), 0.0, 1.0))
        pb = float(np.clip(fit_b(e), 0.0, 1.0))
        return swap_rate(pa, pb, symmetric) - swap_physical(e)

    grid = np.geomspace(lo, hi, 400)
    vals = [gap(e) for e in grid]
    for i in range(1, len(grid)):
        if (vals[i - 1] < 0) != (vals[i] < 0) or vals[i] == 0:
            a, b = grid[i - 1], grid[i]
            ga = vals[i - 1]
            while (b - a) > rtol * a:
                m = math.sqrt(a * b)
                gm = gap(m)
                if (gm < 0) == (ga < 0) and gm != 0:
                    a, ga = m, gm
                else:
                    b = m
            return math.sqrt(a * b)
    raise NoThreshold("no finite SWAP pseudo-threshold in range")


DEFAULT_GRID = (1e-4, 2e-4, 3e-4, 5e-4, 1e-3, 2e-3, 3e-3)

# target pseudo-thresholds the reports compare against
REFERENCE = {
    ("A", "mwd"): 9.36e-7, ("B", "mwd"): 1.99e-6,
    ("A", "nn"): 1.06e-4, ("B", "nn"): 1.98e-4,
    ("swap", "nn"): 1.07e-4,
}


def fit_pure_quadratic(points) -> QuadraticFit:
    """Weighted fit of ``P(e) = a e^2`` alone (``b = c = 0``)."""
    eps, p, sig = _points(points)
    if len(eps) < 1:
        raise ValueError("need at least 1 point")
    x = eps ** 2 / sig
    a = float((x * p / sig).sum() / (x * x).sum())
    var = float(1.0 / (x * x).sum())
    return QuadraticFit(a, 0.0, 0.0, np.diag([var, 0.0, 0.0]))


# -- results files and reports ---------------------------------------------

RESULT_COLUMNS = ["circuit", "decoder", "epsilon", "shots", *ERROR_NAMES[1:], "failures", "rate", "ci_low", "ci_high"]


def write_results(path, rows: list[tuple[str, str, RateEstimate]], config: dict) -> None:
    """Comma-separated rows with ``# key=value`` config lines on top."""
    lines = [f"# {k}={v}" for k, v in config.items()]
    lines.append(",".join(RESULT_COLUMNS))
    for circ, dec, r in rows:
        lo, hi = r.ci()
        vals = [circ, dec, repr(r.epsilon), str(r.shots), *(str(r.counts.get(n, 0)) for n in ERROR_NAMES[1:]),
                str(r.failures), f"{r.rate:.8g}", f"{lo:.8g}", f"{hi:.8g}"]
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_results(path) -> tuple[list[tuple[str, str, RateEstimate]], dict]:
    config, rows = {}, []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                config[k] = v
                continue
            if header is None:
                header = line.split(",")
                if header != RESULT_COLUMNS:
                    raise ValueError(f"{path}: unexpected columns")
                continue
            f = dict(zip(header, line.split(",")))
            est = RateEstimate(float(f["epsilon"]), int(f["shots"]), {n: int(f[n]) for n in ERROR_NAMES[1:]})
            rows.append((f["circuit"], f["decoder"], est))
    return rows, config


@dataclass
class ThresholdResult:
    circuit: str
    decoder: str
    fit: QuadraticFit
    pure: QuadraticFit
    eps_star: float | None          # pure quadratic a e^2 = e
    eps_star_full: float | None     # three-term fit a e^2 + b e + c = e
    slope: float | None
    window: tuple[float, float]

    @property
    def reference(self) -> float | None:
        return REFERENCE.get((self.circuit, self.decoder))

    def lines(self) -> list[str]:
        f, q = self.fit, self.pure
        out = [f"circuit={self.circuit}", f"decoder={self.decoder}",
               f"fit_window={self.window[0]:.3g}..{self.window[1]:.3g}",
               f"a={f.a:.6g}", f"b={f.b:.6g}", f"c={f.c:.6g}",
               f"a_stderr={f.stderr[0]:.3g}", f"b_stderr={f.stderr[1]:.3g}", f"c_stderr={f.stderr[2]:.3g}",
               f"a_pure={q.a:.6g}", f"a_pure_stderr={q.stderr[0]:.3g}",
               f"eps_star={_fmt(self.eps_star)}", f"eps_star_full={_fmt(self.eps_star_full)}",
               f"log_slope={_fmt(self.slope)}"]
        if self.reference is not None:
            out.append(f"reference={self.reference:.3g}")
            if self.eps_star:
                out.append(f"ratio_to_reference={self.eps_star / self.reference:.3g}")
        return out


def _fmt(v) -> str:
    return "none" if v is None else f"{v:.6g}"


def threshold_from_points(points: list[RateEstimate], circuit: str = "", decoder: str = "",
                          window: tuple[float, float] = (1e-4, 1e-3), line: str = "eps") -> ThresholdResult:
    """Fits over the estimates whose epsilon lies in ``window``."""
    sel = [p for p in points if window[0] <= p.epsilon <= window[1] and p.shots]
    full = fit_quadratic(sel)
    pure = fit_pure_quadratic(sel)
    stars = []
    for fit in (pure, full):
        try:
            stars.append(pseudo_threshold(fit, line))
        except NoThreshold:
            stars.append(None)
    slope_pts = [p for p in points if 3e-4 <= p.epsilon <= 3e-3 and p.rate > 0]
    slope = log_slope(slope_pts) if len(slope_pts) >= 2 else None
    return ThresholdResult(circuit, decoder, full, pure, stars[0], stars[1], slope, window)
