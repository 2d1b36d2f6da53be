"""Synthetic panels with known ground truth.

Random stream
-------------
Every series draws from its own Philox4x64-10 counter-based generator keyed
directly by the series seed (``numpy.random.Philox(key=seed)``, counter
starting at zero).  Each raw 64-bit output ``k`` becomes a uniform deviate
``u = ((k >> 11) + 0.5) * 2**-53`` in the open interval (0, 1).  All other
distributions are obtained by inverse-CDF transforms of that uniform stream,
so any implementation with Philox and accurate quantile functions reproduces
the same numbers.

Spec file grammar
-----------------
An INI file, one section per series, the section name being the currency
code::

    [TTD]
    generator = student_t_returns   ; or gaussian_random_walk, ar1_profile, pareto_returns
    nu = 3                          ; student_t_returns
    ; phi = 0.5                     ; ar1_profile
    ; gamma = 3, x_min = 0.001      ; pareto_returns (one key per line)
    scale = 0.004                   ; optional, default 1
    length = 6035
    seed = 17
    market_class = frontier         ; optional metadata
    regime = floating
    region = Americas
    start = 1995-10-23              ; optional, default 1995-10-23
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special, stats

from .errors import ConfigError
from .ingest import CurrencyMeta, PricePanel, reference_metadata

GENERATORS = ("gaussian_random_walk", "ar1_profile", "pareto_returns", "student_t_returns")
DEFAULT_START = "1995-10-23"
MIN_LENGTH = 100


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """``n`` uniforms in (0, 1) from the Philox stream keyed by ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    raw = np.random.Philox(key=seed).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normal_stream(seed: int, n: int) -> np.ndarray:
    return special.ndtri(uniform_stream(seed, n))


def ar1_series(phi: float, n: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Stationary AR(1): x[0] drawn from the stationary law, x[t] = phi*x[t-1] + scale*z[t]."""
    if not -1 < phi < 1:
        raise ConfigError(f"AR(1) coefficient must lie in (-1, 1), got {phi}")
    z = scale * normal_stream(seed, n)
    x = np.empty(n)
    x[0] = z[0] / np.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + z[t]
    return x


def pareto_draws(gamma: float, x_min: float, n: int, seed: int) -> np.ndarray:
    """Magnitudes with density ~ x**-gamma above x_min (inverse-CDF transform)."""
    if not gamma > 1:
        raise ConfigError(f"Pareto PDF exponent must exceed 1, got {gamma}")
    if not x_min > 0:
        raise ConfigError(f"x_min must be positive, got {x_min}")
    return x_min * uniform_stream(seed, n) ** (-1.0 / (gamma - 1.0))


@dataclass(frozen=True)
class SyntheticSpec:
    generator: str
    length: int
    seed: int
    phi: float | None = None
    gamma: float | None = None
    x_min: float | None = None
    nu: float | None = None
    scale: float = 1.0
    code: str = "SYN"
    market_class: str | None = None
    regime: str | None = None
    region: str | None = None
    g_mean: float | None = None
    theil_mean: float | None = None

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.length < MIN_LENGTH:
            raise ConfigError(f"length must be >= {MIN_LENGTH}, got {self.length}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.scale > 0:
            raise ConfigError("scale must be positive")
        g = self.generator
        if g == "ar1_profile" and (self.phi is None or not -1 < self.phi < 1):
            raise ConfigError(f"ar1_profile needs |phi| < 1, got {self.phi}")
        if g == "pareto_returns":
            if self.gamma is None or not self.gamma > 1:
                raise ConfigError(f"pareto_returns needs gamma > 1, got {self.gamma}")
            if self.x_min is None or not self.x_min > 0:
                raise ConfigError(f"pareto_returns needs x_min > 0, got {self.x_min}")
        if g == "student_t_returns" and (self.nu is None or not self.nu > 0):
            raise ConfigError(f"student_t_returns needs nu > 0, got {self.nu}")

    def meta(self) -> CurrencyMeta:
        return CurrencyMeta(self.code, self.regime, self.market_class, self.region,
                            self.g_mean, self.theil_mean)


def synthetic_returns(spec: SyntheticSpec) -> np.ndarray:
    """The ``length - 1`` log returns of a return-type generator."""
    n = spec.length - 1
    if spec.generator == "gaussian_random_walk":
        return spec.scale * normal_stream(spec.seed, n)
    if spec.generator == "student_t_returns":
        return spec.scale * stats.t.ppf(uniform_stream(spec.seed, n), spec.nu)
    if spec.generator == "pareto_returns":
        x = pareto_draws(spec.gamma, spec.x_min, n, spec.seed)
        x[1::2] *= -1.0
        return x
    raise ConfigError(f"{spec.generator} does not produce returns")


def synthetic_log_path(spec: SyntheticSpec) -> np.ndarray:
    """Log-price path of length ``spec.length`` (starts at log price 0 for return generators)."""
    if spec.generator == "ar1_profile":
        return ar1_series(spec.phi, spec.length, spec.seed, spec.scale)
    return np.concatenate([[0.0], np.cumsum(synthetic_returns(spec))])


def gen_synthetic_panel(specs, start=DEFAULT_START) -> PricePanel:
    """Build a panel from generator specs; shorter series are padded with trailing gaps."""
    specs = list(specs)
    if not specs:
        raise ConfigError("no synthetic series requested")
    T = max(s.length for s in specs)
    lp = np.full((len(specs), T), np.nan)
    for i, s in enumerate(specs):
        lp[i, : s.length] = synthetic_log_path(s)
    d0 = np.datetime64(start, "D")
    dates = d0 + np.arange(T)
    return PricePanel(tuple(s.meta() for s in specs), dates, lp)


# ---------------------------------------------------------------------------
# Spec files

_FLOAT_KEYS = ("phi", "gamma", "x_min", "nu", "scale", "g_mean", "theil_mean")


def parse_spec_file(path) -> tuple[list[SyntheticSpec], str]:
    """Read an INI spec file; returns the specs and the common start date."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not read:
        raise FileNotFoundError(path)
    specs, starts = [], set()
    for code in cp.sections():
        sec = cp[code]
        kw: dict = {"code": code}
        try:
            kw["generator"] = sec["generator"].strip()
            kw["length"] = int(sec["length"])
            kw["seed"] = int(sec["seed"])
            for key in _FLOAT_KEYS:
                if key in sec:
                    kw[key] = float(sec[key])
        except KeyError as exc:
            raise ConfigError(f"{path} [{code}]: missing key {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{path} [{code}]: {exc}") from None
        for key in ("market_class", "regime", "region"):
            if key in sec:
                kw[key] = sec[key].strip()
        starts.add(sec.get("start", DEFAULT_START).strip())
        try:
            specs.append(SyntheticSpec(**kw))
        except ValueError as exc:
            raise ConfigError(f"{path} [{code}]: {exc}") from None
    if len(starts) > 1:
        raise ConfigError(f"{path}: all series must share one start date")
    if not specs:
        raise ConfigError(f"{path}: no series sections")
    return specs, (starts.pop() if starts else DEFAULT_START)


def write_spec_file(specs, path, start=DEFAULT_START) -> None:
    cp = configparser.ConfigParser()
    for s in specs:
        sec = {"generator": s.generator, "length": str(s.length), "seed": str(s.seed), "start": start}
        for key in _FLOAT_KEYS:
            v = getattr(s, key)
            if v is not None and not (key == "scale" and v == 1.0):
                sec[key] = repr(v)
        for key in ("market_class", "regime", "region"):
            if getattr(s, key):
                sec[key] = getattr(s, key)
        cp[s.code] = sec
    with Path(path).open("w") as fh:
        cp.write(fh)


# ---------------------------------------------------------------------------
# Bundled 75-currency fixture

BUNDLE_LENGTH = 6035
BUNDLE_SEED = 20160101

# Generator per market class: Gaussian steps for developed markets, Student-t
# steps with decreasing degrees of freedom for emerging and frontier ones.
CLASS_GENERATORS = {
    "developed": dict(generator="gaussian_random_walk", scale=0.006),
    "emerging": dict(generator="student_t_returns", nu=4.0, scale=0.004),
    "frontier": dict(generator="student_t_returns", nu=2.0, scale=0.002),
}


def bundled_specs(length: int = BUNDLE_LENGTH, seed: int = BUNDLE_SEED) -> list[SyntheticSpec]:
    """One spec per reference currency, generator chosen by market class."""
    specs = []
    for i, meta in enumerate(reference_metadata().values()):
        specs.append(SyntheticSpec(
            length=length, seed=seed + i, code=meta.code,
            market_class=meta.market_class, regime=meta.regime, region=meta.region,
            g_mean=meta.g_mean, theil_mean=meta.theil_mean,
            **CLASS_GENERATORS[meta.market_class],
        ))
    return specs


def bundled_panel(length: int = BUNDLE_LENGTH, seed: int = BUNDLE_SEED) -> PricePanel:
    return gen_synthetic_panel(bundled_specs(length, seed))


def bundled_macro(seed: int = BUNDLE_SEED, years=range(1995, 2013), n_products: int = 40):
    """Annual GDP and export rows consistent with the reference table.

    GDP per capita fluctuates +-10% around the tabulated mean.  Exports are
    drawn per country and year with a log-normal spread that grows with the
    tabulated Theil index, so the recomputed index tracks the table's ordering.
    Returns ``(gdp_rows, export_rows)`` as lists of tuples.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    gdp_rows, export_rows = [], []
    for meta in reference_metadata().values():
        g = meta.g_mean
        theil = meta.theil_mean if meta.theil_mean is not None else 2.5
        for y in years:
            gdp_rows.append((meta.code, y, round(g * (1 + 0.1 * (rng.random() * 2 - 1)), 2)))
            k = max(3, int(round(n_products * np.exp(-0.5 * (theil - 1.4)))))
            products = np.sort(rng.choice(777, size=k, replace=False))
            values = np.exp(rng.normal(0.0, 0.6 * theil, size=k)) * 1e6
            for pid, v in zip(products, values):
                export_rows.append((meta.code, y, int(pid), round(float(v), 2)))
    return gdp_rows, export_rows


