"""Run configuration: TOML parsing, validation and initial-state construction.

Example::

    seed = 7

    [chain]
    kind = "open"          # or "periodic"
    N = 3
    n = 2

    [orbits.1]
    kind = "rank1"
    xi = 1.0

    [orbits.2]
    kind = "rank1"
    xi = -0.5

    [boundary.left]        # open chains only; omitted means the zero orbit
    kind = "k-orbit"
    spectrum = [0.6]

    [hamiltonian]
    site = 2
    degree = 2

    [time]
    T = 1.0
    method = "dop853"      # dop853 | rk4 | midpoint
    dt = 1e-3
    save_every = 10

    [output]
    format = "json"        # json | csv | both

An ``[initial]`` table may fix ``p`` and/or ``q`` explicitly, scale the random
momenta (``p_scale``) or request ``free_flight = true`` (open chains: zero
boundary points and symmetric spins, so ``H2^(n)`` is purely kinetic; random
momenta are then sorted like ``q`` so the particles drift apart).
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .dynamics.integrate import SCHEMES, IntegratorConfig
from .openchain import OpenRadialState
from .orbits import KOrbitPoint, RankOneOrbitPoint, normalize_gauge, sample_constrained, sample_k_orbit, sample_rank1
from .periodic import PeriodicRadialState, random_q

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "config_hash", "build_state"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    kind: str
    N: int
    n: int
    xis: tuple[float, ...]
    left: tuple[float, ...] | None = None
    right: tuple[float, ...] | None = None
    site: int = 1
    degree: int = 2
    T: float = 1.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seed: int = 0
    fmt: str = "json"
    p: tuple[float, ...] | None = None
    q: tuple[float, ...] | None = None
    p_scale: float = 1.0
    free_flight: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["integrator"] = self.integrator.to_dict()
        return d


_KNOWN = {
    "": {"seed", "chain", "orbits", "boundary", "hamiltonian", "time", "output", "initial"},
    "chain": {"kind", "N", "n"},
    "hamiltonian": {"site", "degree"},
    "time": {"T", "method", "dt", "rtol", "atol", "save_every", "gradient", "fd_step", "project"},
    "output": {"format"},
    "initial": {"p", "q", "p_scale", "free_flight"},
}


def _unknown(table: dict, where: str):
    extra = set(table) - _KNOWN[where]
    if extra:
        prefix = f"{where}." if where else ""
        raise ConfigError(f"unknown key(s): {', '.join(prefix + k for k in sorted(extra))}")


def _int(d, key, where, lo=None):
    v = d.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}.{key}: must be >= {lo}, got {v}")
    return v


def _float(d, key, where, default=None, positive=False):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"{where}.{key}: expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {v}")
    return float(v)


def _vec(v, N, key):
    if not isinstance(v, list) or len(v) != N or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"initial.{key}: expected a list of {N} numbers")
    arr = np.array(v, dtype=float)
    if abs(arr.sum()) > 1e-12 * max(1.0, np.abs(arr).max()):
        raise ConfigError(f"initial.{key}: entries must sum to zero")
    return tuple(float(x) for x in arr)


def _boundary(spec, N, where):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a table")
    if set(spec) - {"kind", "spectrum"}:
        raise ConfigError(f"{where}: unknown key(s) {sorted(set(spec) - {'kind', 'spectrum'})}")
    if spec.get("kind") != "k-orbit":
        raise ConfigError(f"{where}.kind: boundary orbits must be 'k-orbit'")
    spec_v = spec.get("spectrum", [])
    if not isinstance(spec_v, list) or len(spec_v) != N // 2:
        raise ConfigError(f"{where}.spectrum: expected {N // 2} rotation rates for so({N})")
    vals = []
    for x in spec_v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x) or x < 0:
            raise ConfigError(f"{where}.spectrum: rates must be finite and nonnegative, got {x!r}")
        vals.append(float(x))
    return tuple(vals)


def parse_config(raw: dict) -> RunConfig:
    """Validate a parsed TOML document."""
    _unknown(raw, "")
    chain = raw.get("chain")
    if not isinstance(chain, dict):
        raise ConfigError("chain: missing [chain] table")
    _unknown(chain, "chain")
    kind = chain.get("kind")
    if kind not in ("periodic", "open"):
        raise ConfigError(f"chain.kind: expected 'periodic' or 'open', got {kind!r}")
    N = _int(chain, "N", "chain", lo=2)
    n = _int(chain, "n", "chain", lo=1)

    orbits = raw.get("orbits", {})
    if not isinstance(orbits, dict):
        raise ConfigError("orbits: expected tables [orbits.1] ... [orbits.n]")
    expected = {str(k) for k in range(1, n + 1)}
    if set(orbits) != expected:
        raise ConfigError(f"orbits: need exactly the sites {sorted(expected, key=int)}, got {sorted(orbits)}")
    xis = []
    for k in range(1, n + 1):
        spec = orbits[str(k)]
        where = f"orbits.{k}"
        if not isinstance(spec, dict) or spec.get("kind") != "rank1":
            raise ConfigError(f"{where}.kind: site orbits must be 'rank1'")
        if set(spec) - {"kind", "xi"}:
            raise ConfigError(f"{where}: unknown key(s) {sorted(set(spec) - {'kind', 'xi'})}")
        xi = _float(spec, "xi", where)
        if xi == 0.0:
            raise ConfigError(f"{where}.xi: must be nonzero")
        xis.append(xi)

    bnd = raw.get("boundary", {})
    left = right = None
    if bnd:
        if kind != "open":
            raise ConfigError("boundary: only open chains have boundary orbits")
        if not isinstance(bnd, dict) or set(bnd) - {"left", "right"}:
            raise ConfigError("boundary: expected [boundary.left] and/or [boundary.right]")
        if "left" in bnd:
            left = _boundary(bnd["left"], N, "boundary.left")
        if "right" in bnd:
            right = _boundary(bnd["right"], N, "boundary.right")

    ham = raw.get("hamiltonian", {})
    _unknown(ham, "hamiltonian")
    site = _int(ham, "site", "hamiltonian") if "site" in ham else n
    degree = _int(ham, "degree", "hamiltonian") if "degree" in ham else 2
    lo_site = 1 if kind == "periodic" else 0
    if not lo_site <= site <= n:
        raise ConfigError(f"hamiltonian.site: must lie in {lo_site}..{n}, got {site}")
    if not 2 <= degree <= N:
        raise ConfigError(f"hamiltonian.degree: must lie in 2..{N}, got {degree}")

    tm = raw.get("time", {})
    _unknown(tm, "time")
    T = _float(tm, "T", "time", default=1.0)
    method = tm.get("method", "dop853")
    if method not in SCHEMES:
        raise ConfigError(f"time.method: expected one of {SCHEMES}, got {method!r}")
    kw = {"scheme": method}
    for key in ("dt", "rtol", "atol", "fd_step"):
        if key in tm:
            kw[key] = _float(tm, key, "time", positive=True)
    if "save_every" in tm:
        kw["save_every"] = _int(tm, "save_every", "time", lo=1)
    if "gradient" in tm:
        if tm["gradient"] not in ("analytic", "fd"):
            raise ConfigError(f"time.gradient: expected 'analytic' or 'fd', got {tm['gradient']!r}")
        kw["gradient"] = tm["gradient"]
    if "project" in tm:
        if not isinstance(tm["project"], bool):
            raise ConfigError("time.project: expected true or false")
        kw["project"] = tm["project"]
    integrator = IntegratorConfig(**kw)

    out = raw.get("output", {})
    _unknown(out, "output")
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv", "both"):
        raise ConfigError(f"output.format: expected json, csv or both, got {fmt!r}")

    init = raw.get("initial", {})
    _unknown(init, "initial")
    p = _vec(init["p"], N, "p") if "p" in init else None
    q = _vec(init["q"], N, "q") if "q" in init else None
    if q is not None and len(set(q)) != N:
        raise ConfigError("initial.q: entries must be pairwise distinct")
    p_scale = _float(init, "p_scale", "initial", default=1.0)
    free = init.get("free_flight", False)
    if not isinstance(free, bool):
        raise ConfigError("initial.free_flight: expected true or false")
    if free and kind != "open":
        raise ConfigError("initial.free_flight: only open chains admit a zero potential with rank-one spins")
    if free and (left or right) and any(v != 0 for v in (left or ()) + (right or ())):
        raise ConfigError("initial.free_flight: boundary spectra must be zero")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: expected a nonnegative integer, got {seed!r}")

    return RunConfig(kind, N, n, tuple(xis), left, right, site, degree, T, integrator, seed, fmt, p, q, p_scale, free)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the validated config (seed excluded)."""
    d = cfg.to_dict()
    d.pop("seed")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_state(cfg: RunConfig, rng: np.random.Generator | None = None):
    """Initial radial state drawn from ``cfg.seed`` (or ``rng``)."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    N, n = cfg.N, cfg.n
    q = np.array(cfg.q) if cfg.q is not None else random_q(N, rng)
    if cfg.p is not None:
        p = np.array(cfg.p)
    else:
        p = cfg.p_scale * rng.standard_normal(N)
        p -= p.mean()
        if cfg.free_flight:
            # same order as q: free particles then separate and never meet a wall
            p = np.sort(p)[::-1]
    if cfg.kind == "periodic":
        spins = sample_constrained(list(cfg.xis), N, rng)
        return PeriodicRadialState(spins, p, q)
    if cfg.free_flight:
        spins = []
        for xi in cfg.xis:
            a = rng.uniform(0.5, 1.5, N)
            spins.append(normalize_gauge(RankOneOrbitPoint(xi, a, xi * a / (a @ a))))
        L = R = KOrbitPoint.zero(N)
    else:
        spins = [sample_rank1(N, xi, rng) for xi in cfg.xis]
        L = sample_k_orbit(cfg.left, rng, N) if cfg.left is not None else KOrbitPoint.zero(N)
        R = sample_k_orbit(cfg.right, rng, N) if cfg.right is not None else KOrbitPoint.zero(N)
    return OpenRadialState(L, spins, R, p, q)
