"""Reproducible experiment families built on the certificate engine.

Each runner takes an :class:`ExperimentConfig`, returns the JSON payload and,
when ``config.output`` is set, writes ``report.json`` (source of truth) plus
the derived ``report.csv`` / ``report.svg``.  Nothing time- or
host-dependent enters the payload, so identical configs give byte-identical
files.

CSV columns
-----------
snowflake:      K, n_points, r_star, pair_i, pair_j, threshold, status, lip_p, radius,
                lower_bound, functions, samples, excluded, exclusion_rate, min_pair_ratio
dual-thinness:  n, n_points, r_star, pair_i, pair_j, threshold, status, radius,
                lower_bound, expected_lower_bound, functions, samples, excluded,
                exclusion_rate, min_pair_ratio
barrier:        one row per dual vector: x1..xd, support, barrier, polar, in_span
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import svg
from .convex import (
    UNBOUNDED,
    PolyhedralGauge,
    barrier_membership,
    boundedness_check,
    in_row_span,
    linear_witness,
    polar_membership,
    sphere_min,
    support_value,
)
from .errors import ConfigError, InvariantFailure, RatioTooLarge
from .lipschitz import ClassParams, PointFunction, TargetSpace, lip_norm, sample_function
from .metric import GaugePair, dyadic_chain, gauge_ratio_inf, normed_point_space, snowflake
from .porosity import (
    EscapeCertificate,
    build_escape,
    escape_threshold,
    sample_ball_exclusion,
    verify_certificate,
)

FORMATS = ("json", "csv", "svg")


@dataclass
class ExperimentConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    output: Optional[Path] = None
    formats: tuple[str, ...] = ("json",)

    def __post_init__(self):
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}; choose from {FORMATS}")
        if self.output is not None:
            self.output = Path(self.output)

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def require(self, key: str):
        if self.params.get(key) is None:
            raise ConfigError(f"experiment {self.name!r} needs parameter {key!r}")
        return self.params[key]


def _int(config: ExperimentConfig, key: str, default=None) -> int:
    v = config.get(key, default)
    if v is None:
        raise ConfigError(f"experiment {config.name!r} needs parameter {key!r}")
    try:
        out = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {v!r}") from None
    if out != v and not isinstance(v, str):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return out


def _float(config: ExperimentConfig, key: str, default=None) -> float:
    v = config.get(key, default)
    if v is None:
        raise ConfigError(f"experiment {config.name!r} needs parameter {key!r}")
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{key} must be finite, got {v!r}")
    return out


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row.get(c) is None else row.get(c) for c in columns])
    return buf.getvalue()


def _write(config: ExperimentConfig, payload: dict, columns: list[str], rows: list[dict],
           chart: Optional[str], extra: Optional[dict[str, str]] = None) -> None:
    if config.output is None:
        return
    out = config.output
    out.mkdir(parents=True, exist_ok=True)
    if "json" in config.formats:
        (out / "report.json").write_text(_dump_json(payload), encoding="utf-8")
    if "csv" in config.formats:
        (out / "report.csv").write_text(_csv_text(columns, rows), encoding="utf-8")
    if "svg" in config.formats and chart is not None:
        (out / "report.svg").write_text(chart, encoding="utf-8")
    for rel, text in (extra or {}).items():
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _certify(cert: EscapeCertificate, samples: int, seed) -> dict:
    """Verify a certificate and sample its ball; any failure is a soundness bug."""
    report = verify_certificate(cert)
    if not report.ok:
        raise InvariantFailure(f"certificate at pair {cert.pair} failed checks {report.failed()}")
    exclusion = sample_ball_exclusion(cert, samples, seed)
    if not exclusion.all_excluded:
        raise InvariantFailure(f"certified ball at pair {cert.pair} contains class members")
    return exclusion.to_dict()


def _aggregate(row: dict, certs: list[EscapeCertificate], exclusions: list[dict], samples: int):
    row.update(
        functions=len(certs),
        samples=samples * len(certs),
        excluded=sum(e["excluded"] for e in exclusions),
        min_pair_ratio=min(e["min_pair_ratio"] for e in exclusions),
        radius=certs[0].radius,
        lower_bound=certs[0].lower_bound,
    )
    row["exclusion_rate"] = row["excluded"] / row["samples"]


# ---------------------------------------------------------------- snowflake

SNOWFLAKE_COLUMNS = ["K", "n_points", "r_star", "pair_i", "pair_j", "threshold", "status",
                     "lip_p", "radius", "lower_bound", "functions", "samples", "excluded",
                     "exclusion_rate", "min_pair_ratio"]


def _snowflake_params(config: ExperimentConfig) -> dict:
    alpha = _float(config, "alpha", 0.5)
    beta = _float(config, "beta", 1.0)
    s = _float(config, "s", 1.0)
    k_min, k_max = _int(config, "k_min", 4), _int(config, "k_max", 20)
    samples = _int(config, "samples", 1000)
    functions = _int(config, "functions", 3)
    seed = _int(config, "seed")
    m = _int(config, "m", 1)
    norm = config.get("norm", "l2")
    if not (0 < alpha < beta <= 1):
        raise ConfigError(f"need 0 < alpha < beta <= 1, got alpha={alpha}, beta={beta}")
    if not s > 0:
        raise ConfigError(f"s must be positive, got {s}")
    if k_min < 1 or k_max < k_min:
        raise ConfigError(f"empty or invalid K range [{k_min}, {k_max}]")
    if k_max > 48:
        raise ConfigError("k_max above 48 loses exactness of dyadic differences")
    if samples < 1 or functions < 0 or m < 1:
        raise ConfigError("samples and m must be >= 1, functions >= 0")
    if norm not in ("l1", "l2", "linf"):
        raise ConfigError(f"unknown target norm {norm!r}")
    return dict(alpha=alpha, beta=beta, s=s, k_min=k_min, k_max=k_max, samples=samples,
                functions=functions, seed=seed, m=m, norm=norm)


def run_snowflake(config: ExperimentConfig) -> dict:
    """Escape certificates for the Holder class ``d**beta`` inside ``Lip(d**alpha)``.

    For each ``K`` the base space is the snowflaked dyadic chain; the tested
    functions are ``0`` and ``functions`` seeded samples of the class.
    """
    p = _snowflake_params(config)
    target = TargetSpace(p["m"], p["norm"])
    rows, cert_files = [], {}
    for K in range(p["k_min"], p["k_max"] + 1):
        chain = dyadic_chain(K)
        space = snowflake(chain, p["alpha"])
        phi = GaugePair.power(chain, p["beta"])
        params = ClassParams(phi, p["s"])
        r_star, pair = gauge_ratio_inf(space, phi)
        row = dict(K=K, n_points=space.n, r_star=r_star, pair_i=pair[0], pair_j=pair[1],
                   threshold=escape_threshold(p["s"]))
        fs = [PointFunction.zero(space, target)]
        fs += [sample_function(chain, target, p["beta"], p["s"], [p["seed"], K, k]).on(space)
               for k in range(1, p["functions"] + 1)]
        try:
            certs = [build_escape(f, params, pair) for f in fs]
        except RatioTooLarge as exc:
            row.update(status="skipped", reason=str(exc))
            rows.append(row)
            continue
        exclusions = [_certify(c, p["samples"], [p["seed"], K, k, 1]) for k, c in enumerate(certs)]
        row.update(status="ok", lip_p=lip_norm(certs[0].witness.p)[0])
        _aggregate(row, certs, exclusions, p["samples"])
        for k, c in enumerate(certs):
            cert_files[f"certificates/K{K:02d}_f{k}.json"] = _dump_json(c.to_dict())
        rows.append(row)

    payload = {"experiment": "snowflake", "params": p, "rows": rows,
               "certificates": sorted(cert_files)}
    ok = [r for r in rows if r["status"] == "ok"]
    chart = svg.line_chart(
        {"log2 radius": ([r["K"] for r in ok], [math.log2(r["radius"]) for r in ok]),
         "log2 r*": ([r["K"] for r in rows], [math.log2(r["r_star"]) for r in rows])},
        title=f"Escape certificates, alpha={p['alpha']}, beta={p['beta']}, s={p['s']}",
        xlabel="K", ylabel="log2")
    _write(config, payload, SNOWFLAKE_COLUMNS, rows, chart, cert_files)
    return payload


# ------------------------------------------------------------ dual thinness

DUAL_COLUMNS = ["n", "n_points", "r_star", "pair_i", "pair_j", "threshold", "status", "radius",
                "lower_bound", "expected_lower_bound", "functions", "samples", "excluded",
                "exclusion_rate", "min_pair_ratio"]


def thinness_points(n: int) -> np.ndarray:
    """Origin (base), the signed basis vectors of R^n and the all-ones vector."""
    eye = np.eye(n)
    return np.vstack([np.zeros(n), eye, -eye, np.ones(n)])


def run_dual_thinness(config: ExperimentConfig) -> dict:
    """Finite truncations of the identity from l1 into l-infinity.

    On ``R^n`` the functionals bounded for the l-infinity gauge against the
    l1 base metric are escaped at the all-ones pair, whose ratio is ``1/n``;
    the certified lower bound grows like ``sqrt(n)/2 - s``.
    """
    n_min, n_max = _int(config, "n_min", 2), _int(config, "n_max", 64)
    s = _float(config, "s", 1.0)
    seed = _int(config, "seed", 0)
    samples = _int(config, "samples", 200)
    functions = _int(config, "functions", 2)
    if not (2 <= n_min <= n_max <= 64):
        raise ConfigError(f"n range must satisfy 2 <= n_min <= n_max <= 64, got [{n_min}, {n_max}]")
    if not s > 0:
        raise ConfigError(f"s must be positive, got {s}")
    if samples < 1 or functions < 0:
        raise ConfigError("samples must be >= 1 and functions >= 0")
    p = dict(n_min=n_min, n_max=n_max, s=s, seed=seed, samples=samples, functions=functions)

    rows = []
    for n in range(n_min, n_max + 1):
        pts = thinness_points(n)
        space = normed_point_space(pts, ord=1)
        phi = GaugePair.metric(normed_point_space(pts, ord=np.inf).dist)
        params = ClassParams(phi, s)
        r_star, pair = gauge_ratio_inf(space, phi)
        row = dict(n=n, n_points=space.n, r_star=r_star, pair_i=pair[0], pair_j=pair[1],
                   threshold=escape_threshold(s), expected_lower_bound=math.sqrt(n) / 2 - s)
        rng = np.random.default_rng([seed, n])
        fs = [PointFunction.zero(space)]
        for _ in range(functions):
            # |<y, x - x'>| <= ||y||_1 ||x - x'||_inf keeps these inside the class
            y = rng.uniform(-1.0, 1.0, size=n)
            y *= 0.999 * s * rng.uniform() / np.abs(y).sum()
            fs.append(PointFunction(space, pts @ y))
        witness = linear_witness(space, pts, pair, norm="l1")
        try:
            certs = [build_escape(f, params, pair, witness=witness) for f in fs]
        except RatioTooLarge as exc:
            row.update(status="skipped", reason=str(exc))
            rows.append(row)
            continue
        exclusions = [_certify(c, samples, [seed, n, k]) for k, c in enumerate(certs)]
        row.update(status="ok")
        _aggregate(row, certs, exclusions, samples)
        rows.append(row)

    payload = {"experiment": "dual-thinness", "params": p, "rows": rows}
    ok = [r for r in rows if r["status"] == "ok"]
    chart = svg.line_chart(
        {"lower bound": ([r["n"] for r in ok], [r["lower_bound"] for r in ok]),
         "sqrt(n)/2 - s": ([r["n"] for r in ok], [r["expected_lower_bound"] for r in ok])},
        title=f"Escape strength in R^n, s={s}", xlabel="n", ylabel="certified pair ratio")
    _write(config, payload, DUAL_COLUMNS, rows, chart)
    return payload


# ------------------------------------------------------------------ barrier

PRESETS = ("strip", "box", "random")


def random_degenerate_gauge(dim: int, rng: np.random.Generator) -> PolyhedralGauge:
    """Integer rows of rank ``dim - 1``, so ``{phi <= 1}`` contains a line."""
    while True:
        basis = rng.integers(-2, 3, size=(dim - 1, dim))
        mix = rng.integers(-2, 3, size=(dim + 1, dim - 1))
        G = PolyhedralGauge((mix @ basis).astype(float))
        if G.rank == dim - 1 and np.all(np.any(G.rows != 0, axis=1)):
            return G


def make_gauge(preset: str, dim: int, seed: int) -> PolyhedralGauge:
    if preset == "box":
        return PolyhedralGauge.box(dim)
    if preset == "strip":
        return PolyhedralGauge.strip(dim)
    return random_degenerate_gauge(dim, np.random.default_rng(seed))


def _dual_sample(G: PolyhedralGauge, grid: int, duals: int, seed: int) -> np.ndarray:
    if G.dim <= 2:
        axis = np.linspace(-1.0, 1.0, grid)
        mesh = np.meshgrid(*([axis] * G.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    rng = np.random.default_rng([seed, 1])
    half = duals // 2
    spanned = rng.uniform(-1, 1, size=(half, G.rows.shape[0])) @ G.rows
    spanned /= np.maximum(1.0, np.abs(spanned).max(axis=1, keepdims=True))
    generic = rng.uniform(-1, 1, size=(duals - half, G.dim))
    return np.vstack([spanned, generic])


def _gauge_certificates(G: PolyhedralGauge, direction: np.ndarray, s: float, levels: list[int],
                        samples: int, seed: int) -> list[dict]:
    """Escape certificates for ``phi_eps = max(phi, eps ||.||_inf)`` as ``eps -> 0``.

    Points are the origin, the recession direction and the signed basis
    vectors under the l-infinity metric; functions are restricted dual
    vectors, so the certified balls live in the dual space.
    """
    w = direction / np.abs(direction).max()
    cand = np.vstack([np.zeros(G.dim), w, np.eye(G.dim), -np.eye(G.dim)])
    _, first = np.unique(np.round(cand, 12), axis=0, return_index=True)
    pts = cand[np.sort(first)]
    space = normed_point_space(pts, ord=np.inf)
    diff = pts[:, None, :] - pts[None, :, :]
    phi_vals = np.abs(diff @ G.rows.T).max(axis=-1)
    sup_norm = np.abs(diff).max(axis=-1)

    xstar = G.rows[0]
    sigma = support_value(G, xstar)
    out = []
    for level in levels:
        eps = 2.0 ** -level
        phi = GaugePair.raw(np.maximum(phi_vals, eps * sup_norm))
        params = ClassParams(phi, s)
        r_star, pair = gauge_ratio_inf(space, phi)
        row = dict(eps=eps, r_star=r_star, pair=list(pair), threshold=escape_threshold(s))
        fs = [PointFunction.zero(space), PointFunction(space, (0.999 * s / sigma) * (pts @ xstar))]
        witness = linear_witness(space, pts, pair, norm="linf")
        try:
            certs = [build_escape(f, params, pair, witness=witness) for f in fs]
        except RatioTooLarge as exc:
            row.update(status="skipped", reason=str(exc))
            out.append(row)
            continue
        exclusions = [_certify(c, samples, [seed, level, k]) for k, c in enumerate(certs)]
        row.update(status="ok")
        _aggregate(row, certs, exclusions, samples)
        out.append(row)
    return out


def run_barrier_demo(config: ExperimentConfig) -> dict:
    """Barrier cone and polar of ``{phi <= 1}`` for a preset polyhedral gauge."""
    dim = _int(config, "dim", 2)
    preset = config.get("preset", "strip")
    seed = _int(config, "seed", 0)
    grid = _int(config, "grid", 21)
    duals = _int(config, "duals", 200)
    s = _float(config, "s", 1.0)
    samples = _int(config, "samples", 200)
    levels = [int(v) for v in config.get("levels", [4, 6, 8, 10, 12])]
    if preset not in PRESETS:
        raise ConfigError(f"preset must be one of {PRESETS}, got {preset!r}")
    if not (1 <= dim <= 6):
        raise ConfigError(f"dim must be in [1, 6], got {dim}")
    if preset != "box" and dim < 2:
        raise ConfigError(f"preset {preset!r} needs dim >= 2")
    if grid < 2 or duals < 1 or samples < 1 or not s > 0 or not levels:
        raise ConfigError("grid >= 2, duals >= 1, samples >= 1, s > 0 and nonempty levels required")
    p = dict(dim=dim, preset=preset, seed=seed, grid=grid, duals=duals, s=s,
             samples=samples, levels=levels)

    G = make_gauge(preset, dim, seed)
    bounded, direction = boundedness_check(G)
    X = _dual_sample(G, grid, duals, seed)
    rows = []
    for y in X:
        sup = support_value(G, y)
        row = {f"x{k + 1}": float(v) for k, v in enumerate(y)}
        row.update(
            support="unbounded" if sup is UNBOUNDED else sup,
            barrier=barrier_membership(G, y),
            polar=polar_membership(G, y),
            in_span=in_row_span(G, y),
        )
        rows.append(row)
    disagreements = sum(r["barrier"] != r["in_span"] for r in rows)
    polar_outside = sum(r["polar"] and not r["barrier"] for r in rows)
    if polar_outside:
        raise InvariantFailure("polar membership without barrier membership")
    summary = dict(
        bounded=bounded,
        recession_direction=None if direction is None else direction.tolist(),
        rank=G.rank,
        sphere_min_linf=sphere_min(G, "linf"),
        duals=len(rows),
        barrier_fraction=sum(r["barrier"] for r in rows) / len(rows),
        polar_fraction=sum(r["polar"] for r in rows) / len(rows),
        span_fraction=sum(r["in_span"] for r in rows) / len(rows),
        span_disagreements=disagreements,
    )
    certificates = [] if bounded else _gauge_certificates(G, direction, s, levels, samples, seed)
    payload = {"experiment": "barrier", "params": p, "gauge": G.to_dict(), "summary": summary,
               "certificates": certificates, "rows": rows}

    chart = None
    if dim == 2:
        labels = ["polar" if r["polar"] else "barrier" if r["barrier"] else "outside" for r in rows]
        chart = svg.scatter([(r["x1"], r["x2"]) for r in rows], labels,
                            title=f"Barrier cone and polar, preset={preset}",
                            xlabel="x*_1", ylabel="x*_2")
    columns = [f"x{k + 1}" for k in range(dim)] + ["support", "barrier", "polar", "in_span"]
    _write(config, payload, columns, rows, chart)
    return payload


RUNNERS = {
    "snowflake": run_snowflake,
    "dual-thinness": run_dual_thinness,
    "barrier": run_barrier_demo,
}


def run(config: ExperimentConfig) -> dict:
    try:
        runner = RUNNERS[config.name]
    except KeyError:
        raise ConfigError(f"unknown experiment {config.name!r}") from None
    return runner(config)
