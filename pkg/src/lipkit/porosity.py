"""Escape certificates: explicit balls that avoid a gauge-bounded class.

Given ``f`` with ``phi``-seminorm at most ``s`` and a pair ``(a, b)`` whose
ratio ``r = phi(a, b) / d(a, b)`` satisfies ``r < 1/(16 s^2)``, the
perturbation ``f_m = f + sqrt(r) p`` by a witness ``p`` (``||p||_L <= K`` and
``||p(a) - p(b)|| = d(a, b)``) is the center of a closed Lipschitz ball of
radius ``||f_m - f||_L / (2K)`` on which the pair ratio at ``(a, b)`` stays
above ``1/(2 sqrt(r)) - s > s``.  Every function of that ball therefore lies
outside the class, while ``||f_m - f||_L <= K sqrt(r)`` is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegeneratePair,
    InvariantFailure,
    NonUnitDirection,
    NotInClass,
    RatioTooLarge,
)
from .lipschitz import (
    SCALAR,
    ClassParams,
    PointFunction,
    TargetSpace,
    gauge_seminorm,
    lip_norm,
)
from .metric import FiniteMetricSpace, GaugePair, gauge_ratio_inf, pair_indices

REL_TOL = 1e-12


def _close(x: float, y: float, tol: float = REL_TOL) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def escape_threshold(s: float) -> float:
    """Pairs with ratio strictly below this value certify escape at level ``s``."""
    return 1.0 / (16.0 * s * s)


@dataclass(frozen=True, eq=False)
class PorosityWitness:
    p: PointFunction
    K: float
    pair: tuple[int, int]

    def residuals(self) -> dict[str, float]:
        """Violations of the witness invariants (all ``<= 0`` up to rounding)."""
        a, b = self.pair
        d_ab = float(self.p.space.dist[a, b])
        gap = float(self.p.target.row_norms(self.p.values[a] - self.p.values[b]))
        return {
            "lip_excess": lip_norm(self.p)[0] - self.K,
            "gap_error": abs(gap - d_ab),
            "base_value": float(np.abs(self.p.values[self.p.space.base]).max()),
        }


def metric_witness(space: FiniteMetricSpace, pair: tuple[int, int],
                   e: Optional[np.ndarray] = None,
                   target: TargetSpace = SCALAR) -> PorosityWitness:
    """Distance-function witness ``p(x) = (d(x, b) - d(base, b)) e`` with ``K = 1``.

    Subtracting the constant ``d(base, b)`` keeps ``p`` in the base-vanishing
    space without changing any increment.
    """
    a, b = map(int, pair)
    if a == b:
        raise DegeneratePair(f"witness pair must have distinct points, got ({a}, {b})")
    e = target.basis(0) if e is None else np.asarray(e, dtype=float)
    if e.shape != (target.m,):
        raise ValueError(f"direction has shape {e.shape}, expected ({target.m},)")
    if abs(float(target.row_norms(e)) - 1.0) > 1e-12:
        raise NonUnitDirection(f"direction has {target.norm} norm {target.row_norms(e)!r}")
    col = space.dist[:, b] - space.dist[space.base, b]
    return PorosityWitness(PointFunction(space, np.outer(col, e), target), 1.0, (a, b))


@dataclass(frozen=True, eq=False)
class EscapeCertificate:
    f: PointFunction
    params: ClassParams
    pair: tuple[int, int]
    r: float
    witness: PorosityWitness
    f_m: PointFunction
    radius: float
    lower_bound: float

    @property
    def s(self) -> float:
        return self.params.s

    @property
    def K(self) -> float:
        return self.witness.K

    @property
    def space(self) -> FiniteMetricSpace:
        return self.f.space

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "r": self.r,
            "s": self.s,
            "K": self.K,
            "radius": self.radius,
            "lower_bound": self.lower_bound,
            "f": self.f.to_dict(),
            "p": self.witness.p.to_dict(),
            "f_m": self.f_m.to_dict(),
            "space": self.space.to_dict(),
            "phi": self.params.phi.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EscapeCertificate":
        space = FiniteMetricSpace.from_dict(data["space"])
        pair = (int(data["pair"][0]), int(data["pair"][1]))
        params = ClassParams(GaugePair.from_dict(data["phi"]), float(data["s"]))
        p = PointFunction.from_dict(data["p"], space)
        return cls(
            f=PointFunction.from_dict(data["f"], space),
            params=params,
            pair=pair,
            r=float(data["r"]),
            witness=PorosityWitness(p, float(data["K"]), pair),
            f_m=PointFunction.from_dict(data["f_m"], space),
            radius=float(data["radius"]),
            lower_bound=float(data["lower_bound"]),
        )


def build_escape(f: PointFunction, params: ClassParams, pair: tuple[int, int],
                 witness: Optional[PorosityWitness] = None,
                 direction: Optional[np.ndarray] = None) -> EscapeCertificate:
    """Construct the escape certificate for ``f`` at ``pair``.

    Without an explicit ``witness`` the metric witness along ``direction``
    (default: first basis vector of the target) is used.

    Raises
    ------
    NotInClass
        ``f`` has ``phi``-seminorm above ``s``.
    RatioTooLarge
        ``r >= 1/(16 s^2)``; the comparison is strict and exact.
    """
    space, phi, s = f.space, params.phi, params.s
    a, b = map(int, pair)
    if a == b:
        raise DegeneratePair(f"pair must have distinct points, got ({a}, {b})")
    seminorm = gauge_seminorm(f, phi)[0]
    if not seminorm <= s:
        raise NotInClass(seminorm, s)
    r = phi(a, b) / float(space.dist[a, b])
    threshold = escape_threshold(s)
    if not r < threshold:
        raise RatioTooLarge(r, threshold)

    if witness is None:
        witness = metric_witness(space, (a, b), direction, f.target)
    elif tuple(witness.pair) != (a, b) or witness.p.space.n != space.n:
        raise ValueError("witness does not match the certificate pair or space")
    p = witness.p.on(space) if witness.p.space is not space else witness.p

    root = math.sqrt(r)
    f_m = f + root * p
    radius = lip_norm(f_m - f)[0] / (2.0 * witness.K)
    lower_bound = 1.0 / (2.0 * root) - s
    if not lower_bound > s:
        raise RatioTooLarge(r, threshold)
    lip_p = lip_norm(p)[0]
    if not _close(radius, root * lip_p / (2.0 * witness.K)):
        raise InvariantFailure(f"radius {radius!r} != sqrt(r) ||p||_L / 2K")
    return EscapeCertificate(f, params, (a, b), r, PorosityWitness(p, witness.K, (a, b)),
                             f_m, radius, lower_bound)


@dataclass(frozen=True)
class Check:
    passed: bool
    residual: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "residual": self.residual, "detail": self.detail}


@dataclass
class CheckReport:
    checks: dict[str, Check] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def __getitem__(self, name: str) -> Check:
        return self.checks[name]

    def to_dict(self) -> dict:
        out = {name: c.to_dict() for name, c in self.checks.items()}
        out["ok"] = self.ok
        return out


def verify_certificate(cert: EscapeCertificate) -> CheckReport:
    """Re-derive every claim of ``cert`` from its stored fields.

    Five named checks are reported: ``witness``, ``threshold``, ``radius``,
    ``chain`` and ``membership``.  The ``chain`` check follows the reverse
    triangle argument: for any ``g`` with ``||g - f_m||_L <= radius``,

        ratio_g(a, b) >= ratio_{f_m}(a, b) - radius * d(a, b) / phi(a, b)
                      >= (1/sqrt(r) - s) - 1/(2 sqrt(r)) = lower_bound > s,

    each inequality being evaluated numerically.  Nothing is sampled.
    """
    space, phi, s = cert.space, cert.params.phi, cert.s
    a, b = cert.pair
    d_ab = float(space.dist[a, b])
    phi_ab = phi(a, b)
    r, K, radius = cert.r, cert.K, cert.radius
    report = CheckReport()

    w = cert.witness.residuals()
    w_res = max(w["lip_excess"] / max(K, 1.0), w["gap_error"] / max(d_ab, 1.0), w["base_value"])
    report.checks["witness"] = Check(
        K > 0 and tuple(cert.witness.pair) == (a, b) and w_res <= REL_TOL,
        w_res,
        ", ".join(f"{k}={v:.3e}" for k, v in w.items()),
    )

    threshold = escape_threshold(s)
    r_recomputed = phi_ab / d_ab
    report.checks["threshold"] = Check(
        _close(r, r_recomputed) and r < threshold,
        r - threshold,
        f"r={r!r}, phi/d={r_recomputed!r}, 1/(16 s^2)={threshold!r}",
    )

    root = math.sqrt(r) if r > 0 else 0.0
    lip_p = lip_norm(cert.witness.p)[0]
    step = lip_norm(cert.f_m - cert.f)[0]
    f_m_err = float(np.abs(cert.f_m.values - (cert.f.values + root * cert.witness.p.values)).max())
    scale = max(1.0, float(np.abs(cert.f_m.values).max()))
    report.checks["radius"] = Check(
        f_m_err <= REL_TOL * scale
        and _close(radius, step / (2 * K))
        and _close(radius, root * lip_p / (2 * K)),
        max(abs(radius - step / (2 * K)), abs(radius - root * lip_p / (2 * K))),
        f"radius={radius!r}, ||f_m-f||_L/2K={step / (2 * K)!r}, f_m error={f_m_err:.3e}",
    )

    if root > 0:
        ratio_fm = cert.f_m.pair_ratio(a, b, phi_ab)
        first = 1.0 / root - s
        slack = radius * d_ab / phi_ab
        half = 1.0 / (2.0 * root)
        tol = REL_TOL * max(1.0, 1.0 / root)
        guaranteed = ratio_fm - slack
        ok = (ratio_fm >= first - tol
              and slack <= half + tol
              and _close(cert.lower_bound, half - s)
              and guaranteed >= cert.lower_bound - tol
              and cert.lower_bound > s)
        report.checks["chain"] = Check(
            ok, guaranteed - s,
            f"ratio(f_m)={ratio_fm!r} >= {first!r}; radius*d/phi={slack!r} <= {half!r}; "
            f"guaranteed={guaranteed!r} >= lower_bound={cert.lower_bound!r} > s={s!r}",
        )
    else:
        report.checks["chain"] = Check(False, -math.inf, "ratio r must be positive")

    seminorm = gauge_seminorm(cert.f, phi)[0]
    report.checks["membership"] = Check(seminorm <= s, seminorm - s, f"seminorm={seminorm!r}")
    return report


@dataclass(frozen=True)
class ExclusionReport:
    count: int
    excluded: int
    min_pair_ratio: float
    lower_bound: float
    s: float
    pair: tuple[int, int]

    @property
    def all_excluded(self) -> bool:
        return self.excluded == self.count

    @property
    def rate(self) -> float:
        return self.excluded / self.count

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "excluded": self.excluded,
            "all_excluded": self.all_excluded,
            "min_pair_ratio": self.min_pair_ratio,
            "lower_bound": self.lower_bound,
            "s": self.s,
            "pair": list(self.pair),
        }


def sample_ball_exclusion(cert: EscapeCertificate, count: int, seed,
                          include_center: bool = False, chunk: int = 2048) -> ExclusionReport:
    """Draw ``count`` functions from the certified ball and test their pair ratio.

    Each sample is ``g = f_m + h`` where ``h`` is a random direction rescaled
    to Lipschitz norm ``u * radius`` with ``u ~ U[0, 1]``.  With
    ``include_center`` the first sample is ``f_m`` itself.  A sample counts as
    excluded when its ratio at the certificate pair is strictly above ``s``;
    failures are reported, never raised.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    space, target = cert.space, cert.f.target
    n, m = space.n, target.m
    a, b = cert.pair
    phi_ab = cert.params.phi(a, b)
    iu, ju = pair_indices(n)
    pair_d = space.pair_distances()
    rng = np.random.default_rng(seed)

    excluded, lowest, done = 0, math.inf, 0
    while done < count:
        k = min(chunk, count - done)
        h = rng.uniform(-1.0, 1.0, size=(k, n, m))
        h[:, space.base] = 0.0
        lip_h = (target.row_norms(h[:, iu] - h[:, ju]) / pair_d).max(axis=1)
        u = rng.uniform(0.0, 1.0, size=k)
        h *= (cert.radius * u / lip_h)[:, None, None]
        if include_center and done == 0:
            h[0] = 0.0
        g = cert.f_m.values[None] + h
        ratios = target.row_norms(g[:, a] - g[:, b]) / phi_ab
        excluded += int(np.count_nonzero(ratios > cert.s))
        lowest = min(lowest, float(ratios.min()))
        done += k
    return ExclusionReport(count, excluded, lowest, cert.lower_bound, cert.s, (a, b))


@dataclass
class EscapeSequence:
    certificates: list[EscapeCertificate]
    skipped: list[tuple[int, RatioTooLarge]]

    @property
    def radii(self) -> list[float]:
        return [c.radius for c in self.certificates]


def escape_sequence(family: Sequence[tuple[FiniteMetricSpace, PointFunction]],
                    params: Sequence[ClassParams]) -> EscapeSequence:
    """Certificates at the minimal-ratio pair of each member of a family.

    Members whose best ratio is not below ``1/(16 s^2)`` are skipped and
    recorded with their :class:`RatioTooLarge` error.
    """
    if len(family) != len(params):
        raise ValueError("family and params must have the same length")
    certs, skipped = [], []
    for idx, ((space, f), prm) in enumerate(zip(family, params)):
        if f.space is not space:
            f = f.on(space)
        _, pair = gauge_ratio_inf(space, prm.phi)
        try:
            certs.append(build_escape(f, prm, pair))
        except RatioTooLarge as exc:
            skipped.append((idx, exc))
    return EscapeSequence(certs, skipped)
