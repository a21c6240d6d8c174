"""Exception hierarchy shared by every lipkit module."""


class LipkitError(Exception):
    """Base class for all lipkit errors."""


# metric spaces

class MetricError(LipkitError, ValueError):
    pass


class AsymmetricMatrix(MetricError):
    def __init__(self, i, j):
        self.i, self.j = i, j
        super().__init__(f"dist[{i}][{j}] != dist[{j}][{i}]")


class NegativeDistance(MetricError):
    def __init__(self, i, j):
        self.i, self.j = i, j
        super().__init__(f"dist[{i}][{j}] is negative")


class ZeroOffDiagonal(MetricError):
    def __init__(self, i, j):
        self.i, self.j = i, j
        super().__init__(f"dist[{i}][{j}] = 0 for distinct points")


class TriangleViolation(MetricError):
    """``dist[i][j] > dist[i][k] + dist[k][j]``."""

    def __init__(self, i, j, k):
        self.i, self.j, self.k = i, j, k
        super().__init__(f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")


class SingletonSpace(LipkitError, ValueError):
    def __init__(self, what="operation"):
        super().__init__(f"{what} needs at least two points")


class ExponentOutOfRange(LipkitError, ValueError):
    def __init__(self, alpha):
        self.alpha = alpha
        super().__init__(f"exponent {alpha!r} not in (0, 1]")


# Lipschitz functions

class BoundViolated(LipkitError, ValueError):
    def __init__(self, i, j, ratio, bound):
        self.i, self.j, self.ratio, self.bound = i, j, ratio, bound
        super().__init__(f"|g({i}) - g({j})| / d({i},{j}) = {ratio!r} exceeds L = {bound!r}")


class EmptySubset(LipkitError, ValueError):
    pass


# porosity certificates

class DegeneratePair(LipkitError, ValueError):
    pass


class NonUnitDirection(LipkitError, ValueError):
    pass


class NotInClass(LipkitError, ValueError):
    def __init__(self, seminorm, s):
        self.seminorm, self.s = seminorm, s
        super().__init__(f"gauge seminorm {seminorm!r} exceeds class bound s = {s!r}")


class RatioTooLarge(LipkitError, ValueError):
    """The pair ratio ``r`` is not strictly below ``1 / (16 s^2)``."""

    def __init__(self, r, threshold):
        self.r, self.threshold = r, threshold
        super().__init__(f"ratio r = {r!r} is not < 1/(16 s^2) = {threshold!r}")


# free space

class UnbalancedMolecule(LipkitError, ValueError):
    def __init__(self, total):
        self.total = total
        super().__init__(f"molecule weights sum to {total!r}, expected 0")


class NonInjectiveMap(LipkitError, ValueError):
    def __init__(self, i, j, image):
        self.i, self.j, self.image = i, j, image
        super().__init__(f"source points {i} and {j} both map to {image}")


# convex geometry

class DimensionMismatch(LipkitError, ValueError):
    pass


class EmptySet(LipkitError, ValueError):
    pass


# experiments

class ConfigError(LipkitError, ValueError):
    pass


class InvariantFailure(LipkitError, AssertionError):
    """An internal soundness check failed; indicates a bug, not bad input."""
