"""Pinching constants and thresholds in closed form.

Every constant is a short radical expression in the dimension ``n``.  The
dimension (and exponent) domains are validated before evaluation; requests
outside them raise :class:`DomainError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Constant requested outside the range where its formula applies."""


def _require_dim(n, minimum: int = 4) -> int:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise DomainError(f"dimension must be an integer >= {minimum}, got {n!r}")
    return int(n)


def rm0_cubic_constant(n: int) -> float:
    """Coefficient of |Rm0|^3 in the Laplacian lower bound for the trace-free curvature.

    4(n^2-2)/(n sqrt(n^2-1)) + (n^2-n-4)/sqrt((n-2) n (n^2-1)) + sqrt((n-2)(n-1)/n)
    """
    n = _require_dim(n, 3)
    return (4 * (n * n - 2) / (n * math.sqrt(n * n - 1))
            + (n * n - n - 4) / math.sqrt((n - 2) * n * (n * n - 1))
            + math.sqrt((n - 2) * (n - 1) / n))


def scalar_coefficient(n: int, scalar_sign: str = "nonneg") -> float:
    """Coefficient of R |Rm0|^2 in the same bound; depends on the sign of R."""
    n = _require_dim(n, 3)
    if scalar_sign == "nonneg":
        return 1.0 / (n - 1)
    if scalar_sign == "neg":
        return 2.0 / n
    raise DomainError(f"scalar_sign must be 'nonneg' or 'neg', got {scalar_sign!r}")


def combined_cubic_constant(n: int) -> float:
    """rm0_cubic_constant(n) + sqrt((n-2)^3 / (2(n-1)))."""
    n = _require_dim(n, 3)
    return rm0_cubic_constant(n) + math.sqrt((n - 2) ** 3 / (2 * (n - 1)))


def _epsilon_core(n: int) -> float:
    return rm0_cubic_constant(n) + (n - 2) * math.sqrt((n - 2) / (2 * (n - 1)))


EPSILON_BRANCHES = ("critical", "intermediate", "large")


def epsilon_branch(n: int, p: float) -> str:
    """Which closed form of the L^p trace-free pinching threshold applies.

    ``critical`` is p = n/2 in dimensions 4 and 5, ``intermediate`` is
    n/2 < p < 2n/(n-2) in dimensions 4 and 5, ``large`` covers n >= 6 with
    any p >= n/2 and dimensions 4, 5 with p >= 2n/(n-2).
    """
    n = _require_dim(n)
    if not math.isfinite(p) or p < n / 2:
        raise DomainError(f"exponent p must satisfy p >= n/2 = {n / 2:g}, got {p!r}")
    if n >= 6:
        return "large"
    if p == n / 2:
        return "critical"
    if p < 2 * n / (n - 2):
        return "intermediate"
    return "large"


def rm0_pinching_epsilon(n: int, p: float, branch: str | None = None) -> float:
    """Threshold factor for the L^p trace-free curvature pinching condition.

    ``branch`` forces a closed form; it must still be admissible for (n, p)
    unless the call comes from :func:`epsilon_branch_audit`, which evaluates
    the formulas at the branch boundaries.
    """
    selected = epsilon_branch(n, p)
    if branch is not None and branch != selected:
        raise DomainError(
            f"branch {branch!r} does not apply at n={n}, p={p:g}: 'critical' needs n in {{4, 5}} "
            f"and p = n/2; 'intermediate' needs n in {{4, 5}} and n/2 < p < 2n/(n-2); "
            f"'large' needs n >= 6 or p >= 2n/(n-2)")
    return _epsilon_formula(n, p, selected)


def _epsilon_formula(n: int, p: float, branch: str) -> float:
    core = _epsilon_core(n)
    if branch == "critical":
        return (n - 2) / (4 * (n - 1) * core)
    if branch == "intermediate":
        if n >= 6:
            raise DomainError("the intermediate branch carries a factor (6 - n) and is defined only for n = 4, 5")
        base = (n - 2) * (2 * p - n) / (n * (6 - n))
        return base ** (n / (2 * p)) * (6 - n) * p / (2 * (n - 1) * (2 * p - n) * core)
    if branch == "large":
        return 1.0 / ((n - 1) * core)
    raise DomainError(f"unknown branch {branch!r}")


@dataclass(frozen=True)
class BranchJump:
    n: int
    boundary: str
    p: float
    inside_limit: float
    boundary_value: float

    @property
    def jump(self) -> float:
        return self.boundary_value - self.inside_limit


def epsilon_branch_audit(n: int, delta: float = 1e-9) -> tuple[BranchJump, BranchJump]:
    """Jumps of the threshold factor at both ends of the intermediate range.

    The intermediate formula is evaluated just inside each end and compared
    with the neighbouring branch value.  The jumps are recorded, not asserted.
    """
    n = _require_dim(n)
    if n >= 6:
        raise DomainError("branch boundaries exist only for n = 4, 5")
    lo, hi = n / 2, 2 * n / (n - 2)
    left = BranchJump(n, "critical", lo, _epsilon_formula(n, lo + delta, "intermediate"),
                      _epsilon_formula(n, lo, "critical"))
    right = BranchJump(n, "large", hi, _epsilon_formula(n, hi - delta, "intermediate"),
                       _epsilon_formula(n, hi, "large"))
    return left, right


def einstein_pinching_constant(n: int) -> float:
    """Threshold factor for the L^(n/2) norm of W + c Ric0 o g against the Yamabe constant."""
    n = _require_dim(n)
    if n <= 5:
        return math.sqrt((n - 2) / (32 * (n - 1)))
    return 1.0 / math.sqrt(2 * (n - 2) * (n - 1))


def weyl_einstein_constant(n: int) -> float:
    """Cubic Weyl constant for the sphere criterion on positive Einstein manifolds."""
    n = _require_dim(n)
    if n == 4:
        return math.sqrt(6) / 2
    if n == 5:
        return 8 * math.sqrt(10) / 15
    return (4 * (n * n - 2) / (n * math.sqrt(n * n - 1))
            + (n * n - n - 4) / math.sqrt((n - 2) * (n - 1) * n * (n + 1)))


def weitzenbock_constant(n: int) -> float:
    """Cubic coefficient of the Weyl Weitzenbock formula, known in dimensions 4 and 5."""
    n = _require_dim(n)
    if n == 4:
        return math.sqrt(6) / 2
    if n == 5:
        return 8 * math.sqrt(10) / 15
    raise DomainError(f"the Weitzenbock constant is tabulated only for n = 4, 5, got n={n}")


NAMES = ("C", "A", "E", "epsilon", "C1", "C2", "C3")


def evaluate(name: str, n: int, p: float | None = None, scalar_sign: str = "nonneg") -> float:
    """Look a constant up by its short name."""
    if name == "C":
        return rm0_cubic_constant(n)
    if name == "A":
        return scalar_coefficient(n, scalar_sign)
    if name == "E":
        return combined_cubic_constant(n)
    if name == "epsilon":
        if p is None:
            raise DomainError("epsilon needs an exponent p")
        return rm0_pinching_epsilon(n, p)
    if name == "C1":
        return einstein_pinching_constant(n)
    if name == "C2":
        return weyl_einstein_constant(n)
    if name == "C3":
        return weitzenbock_constant(n)
    raise DomainError(f"unknown constant {name!r}; expected one of {', '.join(NAMES)}")


def table(n: int, p: float | None = None, scalar_sign: str = "nonneg") -> dict:
    """All constants that apply at (n, p); inapplicable ones are omitted."""
    _require_dim(n)
    out = {}
    for name in NAMES:
        if name == "epsilon" and p is None:
            continue
        if name == "C3" and n not in (4, 5):
            continue
        out[name] = evaluate(name, n, p, scalar_sign)
    if p is not None:
        out["epsilon_branch"] = epsilon_branch(n, p)
    return out
