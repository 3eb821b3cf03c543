"""
Numeric realization of Fatou coordinates.

Blocks are summed by their integral section: the block with generator (a, q) is
x^a f(l(x)) = int_d^x s^(a-1) q(-log s) ds, evaluated after the substitution s = exp(-1/t).
The principal part is the sum of the infinite blocks plus rho * l2^-1; the infinitesimal part
is the orbit sum R(x) = -sum_k delta(f^k(x)) of the residual delta = 1 - (Psi_oo(f) - Psi_oo).
All arithmetic runs in mpmath at the caller's working precision.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import takewhile
from typing import Callable, Iterator, Optional, Sequence, Union

import mpmath
import numpy as np
import sympy
from mpmath import mp, mpf
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .blocks import BlockSeries, IntegralBlock
from .errors import NumericDomainError, ParseError, ToleranceError
from .formal import FatouExpansion
from .parser import DulacGermSpec, NumericSource
from .rational import RationalU

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORBIT = 4000
ORBIT_CHECKPOINT = 16
ZERO_PROBE = 3
RICHARDSON_ORDER = 10
TAIL_WINDOW = 64
GERM_CACHE_SIZE = 8192
AUTO_ORBIT_ORDER = 4

Real = Union[mpf, float, int]


def default_anchor() -> mpf:
    return mpmath.exp(-1)


def quad_tolerance() -> mpf:
    """Relative quadrature target: half the working digits."""
    return mpf(10) ** (-(mp.dps // 2))


def zero_threshold() -> mpf:
    """Residuals below this are quadrature noise."""
    return 10 * quad_tolerance()


# --- iterated logarithms ---

def eval_ell(x: Real, k: int) -> mpf:
    """l_0 = x, l_1 = -1/log x, l_2 = l_1(l_1(x))."""
    x = mpf(x)
    if k == 0:
        return x
    if not 0 < x < 1:
        raise NumericDomainError(f"l_{k} needs 0 < x < 1, got {mpmath.nstr(x, 10)}", x)
    ell = -1 / mpmath.log(x)
    if k == 1:
        return ell
    if k == 2:
        if not ell < 1:
            raise NumericDomainError(f"l_2 needs x < 1/e, got {mpmath.nstr(x, 10)}", x)
        return -1 / mpmath.log(ell)
    raise NumericDomainError(f"logarithm depth {k} is not supported")


def ell2_inverse(x: Real) -> mpf:
    """l2^-1(x) = log(-log x)."""
    return 1 / eval_ell(x, 2)


# --- rational functions of u ---

def _mp_coefficients(values) -> list[mpf]:
    return [mpf(c.numerator) / c.denominator for c in reversed(values)]


@dataclass(frozen=True)
class _MpRational:
    numerator: tuple
    denominator: tuple

    @classmethod
    def of(cls, q: RationalU) -> "_MpRational":
        return cls(tuple(_mp_coefficients(q.numerator_coefficients())), tuple(_mp_coefficients(q.denominator_coefficients())))

    def __call__(self, u: mpf) -> mpf:
        return mpmath.polyval(list(self.numerator), u) / mpmath.polyval(list(self.denominator), u)


def evaluate_block_series(series: BlockSeries, x: Real) -> mpf:
    """sum_p x^p q_p(-log x) for an exact block series."""
    x = mpf(x)
    u = -mpmath.log(x)
    return mpmath.fsum(
        mpmath.power(x, mpf(p.numerator) / p.denominator) * _MpRational.of(q)(u) for p, q in series.blocks
    )


# --- integral sums ---

def needs_anchor(block: IntegralBlock) -> bool:
    """d > 0 iff the integral diverges at 0: alpha_int < 0, or alpha_int = 0 with l-order <= 1."""
    if block.beta < 0:
        return True
    if block.beta > 0:
        return False
    q = block.summable_q()
    return not q.is_zero and q.degree_gap <= 1


def _check_poles(q: RationalU, t_lo: mpf, t_hi: mpf) -> None:
    for root in q.positive_real_poles():
        u_root = mpf(str(sympy.N(root, mp.dps + 5)))
        t_root = 1 / u_root
        if t_lo <= t_root <= t_hi:
            location = mpmath.exp(-u_root)
            raise NumericDomainError(
                f"generator pole in domain at x = {mpmath.nstr(location, 15)} (u = {mpmath.nstr(u_root, 15)})",
                location,
            )


def _quad(integrand: Callable, a: mpf, b: mpf, tol: mpf) -> mpf:
    if a == b:
        return mpf(0)
    try:
        value, error = mpmath.quad(integrand, [a, b], error=True)
        if error > tol * max(1, abs(value)):
            value, error = mpmath.quad(integrand, [a, (a + b) / 2, b], error=True, maxdegree=mp.dps // 3 + 10)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise ToleranceError(f"quadrature failed on [{mpmath.nstr(a, 8)}, {mpmath.nstr(b, 8)}]: {exc}") from exc
    if error > tol * max(1, abs(value)):
        raise ToleranceError(
            f"quadrature error {mpmath.nstr(error, 3)} exceeds tolerance {mpmath.nstr(tol, 3)}"
        )
    return value


def _t_of(s: mpf) -> mpf:
    """t = l(s); s = 0 maps to t = 0."""
    if s == 0:
        return mpf(0)
    return eval_ell(s, 1)


def block_integral(block: IntegralBlock, lower: Real, upper: Real, tol: Optional[Real] = None) -> mpf:
    """
    int_lower^upper s^(a-1) q(-log s) ds with the l^1 term of q removed (it belongs to rho l2^-1),
    computed as int e^(-a/t) q(1/t) / t^2 dt over t = l(s).
    """
    tol = mpf(tol) if tol is not None else quad_tolerance()
    q = block.summable_q()
    if q.is_zero:
        return mpf(0)
    t_lower, t_upper = _t_of(mpf(lower)), _t_of(mpf(upper))
    _check_poles(q, min(t_lower, t_upper), max(t_lower, t_upper))
    alpha = mpf(block.beta.numerator) / block.beta.denominator
    rational = _MpRational.of(q)

    def integrand(t):
        if t == 0:
            return mpf(0)
        return mpmath.exp(-alpha / t) * rational(1 / t) / (t * t)

    return _quad(integrand, t_lower, t_upper, tol)


def resolve_anchor(block: IntegralBlock, d: Optional[Real] = None) -> mpf:
    if not needs_anchor(block):
        return mpf(0) if d is None else mpf(d)
    d = default_anchor() if d is None else mpf(d)
    if d <= 0:
        raise NumericDomainError("this block diverges at 0 and needs an anchor d > 0")
    return d


def block_value(block: IntegralBlock, x: Real, d: Optional[Real] = None, tol: Optional[Real] = None) -> mpf:
    """Integral-section value of the block at x: int_d^x of its derivative."""
    return block_integral(block, resolve_anchor(block, d), x, tol)


def integral_sum(block: IntegralBlock, y: Real, d: Optional[Real] = None, tol: Optional[Real] = None) -> mpf:
    """
    The l-function f(y) of the block x^a f(l): int_d^(e^(-1/y)) s^(a-1) q(-log s) ds / e^(-a/y).
    d must be 0 exactly when the integral converges at 0 (alpha_int > 0, or = 0 with l-order >= 2).
    """
    y = mpf(y)
    if not 0 < y < 1:
        raise NumericDomainError(f"integral_sum needs 0 < y < 1, got {mpmath.nstr(y, 10)}", y)
    if d is not None and mpf(d) == 0 and needs_anchor(block):
        raise NumericDomainError("the integral diverges at 0: choose d > 0")
    x = mpmath.exp(-1 / y)
    alpha = mpf(block.beta.numerator) / block.beta.denominator
    return block_value(block, x, d, tol) / mpmath.exp(-alpha / y)


def block_partial_sum(block: IntegralBlock, y: Real, n: int) -> mpf:
    """First n monomials of the block's l-expansion (l2 excluded), evaluated at l = y."""
    y = mpf(y)
    monomials = [(e, c) for e, c in block.expansion.terms if e.g2 == 0][:n]
    return mpmath.fsum(mpf(c.numerator) / c.denominator * y ** e.g1 for e, c in monomials)


# --- principal part and residual ---

def _anchor_for(block: IntegralBlock, d_map: Optional[dict]) -> Optional[mpf]:
    if not d_map:
        return None
    return d_map.get(block.beta, d_map.get("default"))


def principal_part_value(
    fexp: FatouExpansion,
    x: Real,
    d_map: Optional[dict] = None,
    tol: Optional[Real] = None,
    blocks: Optional[Sequence[IntegralBlock]] = None,
) -> mpf:
    """Sum of the infinite blocks' integral sums plus rho * l2^-1(x)."""
    x = mpf(x)
    chosen = fexp.principal_blocks if blocks is None else blocks
    total = mpmath.fsum(block_value(b, x, _anchor_for(b, d_map), tol) for b in chosen)
    rho = sum((b.rho for b in chosen), 0)
    if rho:
        total += mpf(rho.numerator) / rho.denominator * ell2_inverse(x)
    return total


def principal_increment(
    fexp: FatouExpansion, x: Real, fx: Real, tol: Optional[Real] = None, blocks: Optional[Sequence[IntegralBlock]] = None
) -> mpf:
    """Psi_oo(fx) - Psi_oo(x) integrated directly between the two points (no anchor involved)."""
    chosen = fexp.principal_blocks if blocks is None else blocks
    total = mpmath.fsum(block_integral(b, x, fx, tol) for b in chosen)
    rho = sum((b.rho for b in chosen), 0)
    if rho:
        total += mpf(rho.numerator) / rho.denominator * (ell2_inverse(fx) - ell2_inverse(x))
    return total


def delta_residual(
    germ: "GermEvaluator",
    fexp: FatouExpansion,
    x: Real,
    tol: Optional[Real] = None,
    blocks: Optional[Sequence[IntegralBlock]] = None,
) -> mpf:
    """1 - (Psi_oo(f(x)) - Psi_oo(x)); `blocks` replaces the principal blocks (truncated Psi)."""
    x = mpf(x)
    return 1 - principal_increment(fexp, x, germ(x), tol, blocks)


# --- germs ---

def closed_form_function(expression: str) -> Callable[[mpf], mpf]:
    """
    Compile a closed form in x, l, l2, u with exp/log into an mpmath function.
    '^' is exponentiation; rational exponents need parentheses, e.g. x^(1/2).
    """
    x = sympy.Symbol("x", positive=True)
    log = sympy.log
    namespace = {
        "x": x,
        "l": -1 / log(x),
        "u": -log(x),
        "l2": -1 / log(-1 / log(x)),
        "log": log,
        "exp": sympy.exp,
        "sqrt": sympy.sqrt,
        "e": sympy.E,
    }
    try:
        expr = parse_expr(
            expression,
            local_dict=namespace,
            global_dict={"Integer": sympy.Integer, "Rational": sympy.Rational, "Float": sympy.Float, "Symbol": sympy.Symbol},
            transformations=standard_transformations + (convert_xor,),
        )
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise ParseError(f"cannot read closed form {expression!r}: {exc}") from exc
    unknown = expr.free_symbols - {x}
    if unknown:
        raise ParseError(f"closed form uses unknown symbols {sorted(map(str, unknown))}")
    compiled = sympy.lambdify(x, expr, "mpmath")
    return lambda value: mpf(compiled(mpf(value)))


def ode_time_one_map(xi, x: Real, tol: Optional[Real] = None, t: Real = 1) -> mpf:
    """Solve dx/dt = xi(x) from x over [0, t] with mpmath's Taylor integrator."""
    if isinstance(xi, str):
        xi = closed_form_function(xi)
    x = mpf(x)
    if not xi(x) < 0:
        raise NumericDomainError(f"generator must be negative at x = {mpmath.nstr(x, 10)}", x)
    try:
        solution = mpmath.odefun(lambda _, y: xi(y), 0, x, tol=tol)
        return solution(mpf(t))
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise ToleranceError(f"ODE integration failed near x = {mpmath.nstr(x, 10)}: {exc}") from exc


class GermEvaluator:
    """
    Numeric germ f on (0, domain) from a closed form, an ODE flow, or a series proxy.

    Values are kept in a bounded LRU keyed by (x, working digits). A flow also remembers,
    for every point it has reached, the ODE solution and the integer time of that point,
    so f(x) and the orbit of x or of f(x) share one integration.
    """

    def __init__(
        self,
        function: Callable[[mpf], mpf],
        source: str,
        domain: Optional[Real] = None,
        description: str = "",
        cache_size: int = GERM_CACHE_SIZE,
    ):
        self.function = function
        self.source = source
        self.domain = mpf(domain) if domain is not None else default_anchor()
        self.description = description
        self.cache_size = cache_size
        self._cache: OrderedDict = OrderedDict()
        self._flows: OrderedDict = OrderedDict()
        self._flow = None

    @classmethod
    def closed_form(cls, expression: str, domain: Optional[Real] = None) -> "GermEvaluator":
        return cls(closed_form_function(expression), NumericSource.CLOSED_FORM, domain, expression)

    @classmethod
    def ode_flow(cls, xi_expression: str, tol: Optional[Real] = None, domain: Optional[Real] = None) -> "GermEvaluator":
        xi = closed_form_function(xi_expression)
        evaluator = cls(lambda value: ode_time_one_map(xi, value, tol), NumericSource.ODE, domain, xi_expression)
        evaluator._flow = (xi, tol)
        return evaluator

    @classmethod
    def series_proxy(cls, germ: Union[DulacGermSpec, BlockSeries], domain: Optional[Real] = None) -> "GermEvaluator":
        series = germ.series() if isinstance(germ, DulacGermSpec) else germ
        return cls(lambda value: evaluate_block_series(series, value), NumericSource.SERIES, domain, str(series))

    @classmethod
    def from_source(cls, source: NumericSource, germ=None, domain: Optional[Real] = None, ode_tol: Optional[Real] = None):
        if source.kind == NumericSource.CLOSED_FORM:
            return cls.closed_form(source.expression, domain)
        if source.kind == NumericSource.ODE:
            return cls.ode_flow(source.expression, ode_tol, domain)
        if germ is None:
            raise NumericDomainError("series proxy needs the formal germ")
        return cls.series_proxy(germ, domain)

    @staticmethod
    def _key(x: mpf) -> tuple:
        return (x, mp.dps)

    def _remember(self, table: OrderedDict, key: tuple, value) -> None:
        table[key] = value
        table.move_to_end(key)
        while len(table) > self.cache_size:
            table.popitem(last=False)

    def _lookup(self, table: OrderedDict, key: tuple):
        value = table.get(key)
        if value is not None:
            table.move_to_end(key)
        return value

    def __call__(self, x: Real) -> mpf:
        x = mpf(x)
        key = self._key(x)
        value = self._lookup(self._cache, key)
        if value is None:
            if self._flow is None:
                value = self.function(x)
            else:
                solution, offset = self._flow_from(x)
                value = self._read(solution, offset + 1, x)
                self._remember(self._flows, self._key(value), (solution, offset + 1))
            self._remember(self._cache, key, value)
        return value

    @property
    def cache_info(self) -> dict:
        return {"values": len(self._cache), "flows": len(self._flows), "maxsize": self.cache_size}

    def _flow_from(self, x: mpf):
        """(solution, time of x on it), integrating afresh only for points no orbit has reached."""
        known = self._lookup(self._flows, self._key(x))
        if known is not None:
            return known
        xi, tol = self._flow
        if not xi(x) < 0:
            raise NumericDomainError(f"generator must be negative at x = {mpmath.nstr(x, 10)}", x)
        try:
            solution = mpmath.odefun(lambda _, y: xi(y), 0, x, tol=tol)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise ToleranceError(f"ODE integration failed near x = {mpmath.nstr(x, 10)}: {exc}") from exc
        self._remember(self._flows, self._key(x), (solution, 0))
        return solution, 0

    @staticmethod
    def _read(solution, time: int, x: mpf) -> mpf:
        try:
            return solution(time)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise ToleranceError(f"ODE integration failed on the flow of x = {mpmath.nstr(x, 10)}: {exc}") from exc

    def orbit(self, x: Real) -> Iterator[mpf]:
        """x, f(x), f(f(x)), ... ; an ODE germ integrates once and reads integer times."""
        current = mpf(x)
        if self._flow is None:
            while True:
                yield current
                current = self(current)
        solution, k = self._flow_from(current)
        while True:
            following = self._read(solution, k + 1, current)
            self._remember(self._cache, self._key(current), following)
            self._remember(self._flows, self._key(following), (solution, k + 1))
            yield current
            current, k = following, k + 1

    def check_domain(self, lower: Real, upper: Real, samples: int = 16) -> None:
        """Sample 0 < f(x) < x on [lower, upper]; for a flow, sample xi < 0 instead."""
        lower, upper = mpf(lower), mpf(upper)
        if not 0 < lower <= upper < self.domain:
            raise NumericDomainError(
                f"interval [{mpmath.nstr(lower, 8)}, {mpmath.nstr(upper, 8)}] is outside (0, {mpmath.nstr(self.domain, 8)})"
            )
        for x in mpmath.linspace(lower, upper, samples) if samples > 1 else [lower]:
            if self._flow is not None:
                if not self._flow[0](x) < 0:
                    raise NumericDomainError(f"generator must be negative at x = {mpmath.nstr(x, 10)}", x)
                continue
            value = self(x)
            if not 0 < value < x:
                raise NumericDomainError(
                    f"germ violates 0 < f(x) < x at x = {mpmath.nstr(x, 10)} (f = {mpmath.nstr(value, 10)})", x
                )


# --- orbit sums ---

@dataclass
class OrbitSum:
    value: mpf
    terms: int
    method: str
    error_estimate: Optional[mpf] = None
    gamma: Optional[float] = None
    r_squared: Optional[float] = None


def fit_power_law(points: Sequence[Real], values: Sequence[Real]) -> tuple[float, float, float]:
    """Least-squares fit log|v| = gamma * log(p) + log C; returns (gamma, C, R^2)."""
    xs = np.array([float(mpmath.log(mpf(p))) for p in points])
    ys = np.array([float(mpmath.log(abs(mpf(v)))) for v in values])
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    total = float(np.sum((ys - ys.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((ys - fitted) ** 2)) / total if total > 0 else 1.0
    return float(slope), float(np.exp(intercept)), r_squared


def orbit_tail_bound(constant: Real, gamma: Real, rate: Real, y: Real) -> mpf:
    """
    Bound on sum_{j>=0} C f^j(y)^gamma using f^j(y) <= y (1 + (j/2) y^a)^(-1/a):
    C y^gamma (1 + 2 / (y^a (gamma/a - 1))).
    """
    constant, gamma, rate, y = mpf(constant), mpf(gamma), mpf(rate), mpf(y)
    return constant * y ** gamma * (1 + 2 / (y ** rate * (gamma / rate - 1)))


def _extrapolate(partials: list[mpf]) -> tuple[mpf, mpf]:
    """Richardson extrapolation of partial sums sampled at equal spacing; returns (value, error estimate)."""
    order = RICHARDSON_ORDER
    count = len(partials) - 1
    spacing = count // (2 * order + 1)
    if spacing < 1:
        raise ToleranceError("not enough orbit terms to extrapolate the orbit sum")
    samples = [partials[j * spacing] for j in range(2 * order + 2)]
    value, _ = mpmath.richardson(samples)
    lower, _ = mpmath.richardson(samples[:-2])
    return value, abs(value - lower)


def infinitesimal_value(
    germ: GermEvaluator,
    delta_fn: Callable[[mpf], mpf],
    x: Real,
    tol: Real,
    alpha1: Real = 2,
    max_orbit: int = DEFAULT_MAX_ORBIT,
) -> OrbitSum:
    """
    R(x) = -sum_k delta(f^k(x)). Stops once the fitted tail bound drops below tol; if the
    budget runs out first, the sampled partial sums are extrapolated. At every checkpoint the
    orbit must stay under the iterate bound with the fitted alpha1 + epsilon.
    """
    x, tol = mpf(x), mpf(tol)
    threshold = zero_threshold()
    alpha1 = mpf(alpha1)
    partial = mpf(0)
    partials = [partial]
    points: list[mpf] = []
    deltas: list[mpf] = []
    previous = None
    fit = None
    for n, y in enumerate(germ.orbit(x)):
        if n >= max_orbit:
            break
        if not y > 0 or (previous is not None and not y < previous):
            raise NumericDomainError(f"orbit left domain at step {n} (value {mpmath.nstr(y, 10)})", y)
        previous = y
        value = delta_fn(y)
        if not mpmath.isfinite(value):
            raise NumericDomainError(f"residual is not finite along the orbit at step {n}", y)
        partial -= value
        partials.append(partial)
        points.append(y)
        deltas.append(value)
        if n + 1 == ZERO_PROBE and all(abs(d) <= threshold for d in deltas):
            return OrbitSum(mpf(0), n + 1, "vanishing")
        if (n + 1) % ORBIT_CHECKPOINT == 0:
            nonzero = [(p, d) for p, d in zip(points, deltas) if abs(d) > threshold][-TAIL_WINDOW:]
            if len(nonzero) < 4:
                continue
            gamma, constant, r_squared = fit_power_law(*zip(*nonzero))
            fit = (gamma, r_squared)
            if gamma <= alpha1 - 1:
                raise ToleranceError(
                    f"tail bound inapplicable: fitted gamma {gamma:.3f} <= alpha1 - 1 = {mpmath.nstr(alpha1 - 1, 6)}"
                )
            epsilon = (gamma - float(alpha1 - 1)) / 4
            rate = float(alpha1 - 1) + epsilon
            if not orbit_bound_check(1 + rate, x, n, y):
                raise NumericDomainError(
                    f"orbit bound violated at step {n}: {mpmath.nstr(y, 10)} is not below "
                    f"{mpmath.nstr(orbit_bound(1 + rate, x, n), 10)} (alpha1 + epsilon = {1 + rate:.3f})",
                    y,
                )
            constant = max(constant, max(float(abs(d) / p ** gamma) for p, d in nonzero[-ORBIT_CHECKPOINT:]))
            bound = orbit_tail_bound(constant, gamma, rate, germ(y))
            logger.debug("orbit checkpoint n=%d partial=%s bound=%s", n + 1, mpmath.nstr(partial, 12), mpmath.nstr(bound, 3))
            if r_squared < 0.9:
                logger.warning("poor tail fit along the orbit of x=%s (R^2 = %.3f)", mpmath.nstr(x, 8), r_squared)
            if bound < tol:
                return OrbitSum(partial, n + 1, "tail-bound", bound, gamma, r_squared)

    logger.warning("orbit tail bound not reached in %d terms; extrapolating", len(deltas))
    value, error = _extrapolate(partials)
    if error > tol:
        raise ToleranceError(
            f"orbit sum did not converge: extrapolation error {mpmath.nstr(error, 3)} > tol {mpmath.nstr(tol, 3)}"
        )
    gamma, r_squared = fit if fit else (None, None)
    return OrbitSum(value, len(deltas), "extrapolated", error, gamma, r_squared)


# --- Fatou coordinate ---

@dataclass
class FatouValue:
    x: mpf
    principal: mpf
    blocks: mpf
    orbit: OrbitSum
    constant: mpf

    @property
    def value(self) -> mpf:
        return self.principal + self.blocks + self.orbit.value + self.constant


def auto_orbit_blocks(fexp: FatouExpansion) -> int:
    """
    Leading infinitesimal blocks of x-order below AUTO_ORBIT_ORDER * (alpha1 - 1). Integrating
    them directly leaves an orbit sum whose terms fall off like n^-AUTO_ORBIT_ORDER or faster.
    """
    limit = AUTO_ORBIT_ORDER * (fexp.alpha1 - 1)
    return len(list(takewhile(lambda block: block.beta < limit, fexp.infinitesimal_blocks)))


def fatou_components(
    germ: GermEvaluator,
    fexp: FatouExpansion,
    x: Real,
    tol: Real,
    anchor: Optional[Real] = None,
    constant: Real = 0,
    orbit_blocks: Optional[int] = None,
    max_orbit: int = DEFAULT_MAX_ORBIT,
) -> FatouValue:
    """
    Psi(x) = principal part + R(x). The first `orbit_blocks` infinitesimal blocks are summed by
    their integral sections and only the remainder goes through the orbit sum; None picks the
    count with `auto_orbit_blocks`.
    """
    x = mpf(x)
    if orbit_blocks is None:
        orbit_blocks = auto_orbit_blocks(fexp)
    d_map = {"default": anchor} if anchor is not None else None
    principal = principal_part_value(fexp, x, d_map)
    extra = list(fexp.infinitesimal_blocks[:orbit_blocks])
    blocks_value = mpmath.fsum(block_value(b, x) for b in extra) if extra else mpf(0)
    used = list(fexp.principal_blocks) + extra
    orbit = infinitesimal_value(
        germ,
        lambda y: delta_residual(germ, fexp, y, blocks=used),
        x,
        tol,
        alpha1=fexp.alpha1.numerator / fexp.alpha1.denominator,
        max_orbit=max_orbit,
    )
    return FatouValue(x, principal, blocks_value, orbit, mpf(constant))


def fatou_value(germ: GermEvaluator, fexp: FatouExpansion, x: Real, tol: Real, **options) -> mpf:
    return fatou_components(germ, fexp, x, tol, **options).value


# --- verification ---

def _scientific(value: mpf, digits: int) -> str:
    return mpmath.nstr(value, digits, min_fixed=1, max_fixed=0, strip_zeros=False)


@dataclass
class ResidualReport:
    grid: list
    f_values: list
    psi_values: list
    psi_f_values: list
    residuals: list
    tol: mpf
    quad_tol: mpf
    digits: int
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r_squared: Optional[float] = None
    alpha1: Optional[float] = None
    orbit_methods: list = field(default_factory=list)

    @property
    def max_residual(self) -> mpf:
        return max(self.residuals) if self.residuals else mpf(0)

    @property
    def within_tolerance(self) -> bool:
        return self.max_residual <= self.tol

    @property
    def slope_ok(self) -> bool:
        """The truncated residual must decay faster than x^(alpha1 - 1), or vanish."""
        if self.slope is None or self.alpha1 is None:
            return True
        return self.slope > self.alpha1 - 1

    @property
    def passed(self) -> bool:
        return self.within_tolerance and self.slope_ok

    def to_csv(self) -> str:
        lines = ["x,f_x,psi_x,psi_f_x,residual"]
        for row in zip(self.grid, self.f_values, self.psi_values, self.psi_f_values, self.residuals):
            lines.append(",".join(_scientific(v, self.digits) for v in row))
        return "\n".join(lines) + "\n"


def truncated_residual_slope(germ: GermEvaluator, fexp: FatouExpansion, grid: Sequence[Real], blocks=None):
    """Fitted log-log slope of |delta| of the truncated expansion on the grid; None when it vanishes."""
    threshold = 100 * quad_tolerance()
    points, values = [], []
    for x in grid:
        value = delta_residual(germ, fexp, x, blocks=blocks)
        if abs(value) > threshold:
            points.append(x)
            values.append(value)
    if len(points) < 3:
        return None, None, None
    return fit_power_law(points, values)


def verify_abel(
    germ: GermEvaluator,
    fexp: FatouExpansion,
    grid: Sequence[Real],
    tol: Real,
    anchor: Optional[Real] = None,
    constant: Real = 0,
    orbit_blocks: Optional[int] = None,
    max_orbit: int = DEFAULT_MAX_ORBIT,
) -> ResidualReport:
    """|Psi(f(x)) - Psi(x) - 1| on the grid, plus the decay slope of the truncated residual."""
    tol = mpf(tol)
    grid = [mpf(x) for x in grid]
    if any(not b < a for a, b in zip(grid, grid[1:])):
        raise NumericDomainError("verification grid must be strictly decreasing toward 0")
    germ.check_domain(min(grid), max(grid))
    if orbit_blocks is None:
        orbit_blocks = auto_orbit_blocks(fexp)
        logger.info("integrating %d infinitesimal blocks ahead of the orbit sum", orbit_blocks)
    options = dict(anchor=anchor, constant=constant, orbit_blocks=orbit_blocks, max_orbit=max_orbit)
    orbit_tol = tol / 10
    report = ResidualReport([], [], [], [], [], tol, quad_tolerance(), mp.dps)
    for x in grid:
        fx = germ(x)
        at_x = fatou_components(germ, fexp, x, orbit_tol, **options)
        at_fx = fatou_components(germ, fexp, fx, orbit_tol, **options)
        residual = abs(at_fx.value - at_x.value - 1)
        report.grid.append(x)
        report.f_values.append(fx)
        report.psi_values.append(at_x.value)
        report.psi_f_values.append(at_fx.value)
        report.residuals.append(residual)
        report.orbit_methods.append(at_x.orbit.method)
    slope, constant_fit, r_squared = truncated_residual_slope(germ, fexp, grid)
    report.slope = slope
    report.intercept = float(np.log(constant_fit)) if constant_fit else None
    report.r_squared = r_squared
    report.alpha1 = float(fexp.alpha1)
    logger.info("verification: max residual %s over %d points", mpmath.nstr(report.max_residual, 5), len(grid))
    return report


# --- iterate bounds ---

def orbit_bound(alpha_eps: Real, x: Real, n: int) -> mpf:
    """x (1 + (n/2) x^(a-1))^(-1/(a-1))."""
    a, x = mpf(alpha_eps), mpf(x)
    return x * (1 + mpf(n) / 2 * x ** (a - 1)) ** (-1 / (a - 1))


def _model_orbit(alpha_eps: Real, x: Real) -> Iterator[mpf]:
    a, current = mpf(alpha_eps), mpf(x)
    while True:
        yield current
        current = current - current ** a


def orbit_bound_check(alpha_eps: Real, x: Real, n: int, value: Optional[Real] = None) -> bool:
    """
    Does the n-th iterate stay below x (1 + (n/2) x^(a-1))^(-1/(a-1))? `value` is that iterate
    of the germ at hand; without it the model map f1(x) = x - x^a is iterated.
    """
    if not mpf(alpha_eps) > 1:
        raise NumericDomainError("the iterate bound needs alpha + epsilon > 1")
    if value is not None:
        return 0 < mpf(value) < orbit_bound(alpha_eps, x, n)
    for k, iterate in enumerate(_model_orbit(alpha_eps, x)):
        if k == n:
            return 0 < iterate < orbit_bound(alpha_eps, x, n)


def scan_orbit_bound(alpha_eps: Real, x: Real, n_max: int) -> Optional[int]:
    """Smallest n0 such that the iterate bound holds for every n in [n0, n_max]; None if it fails at n_max."""
    if not mpf(alpha_eps) > 1:
        raise NumericDomainError("the iterate bound needs alpha + epsilon > 1")
    last_failure = -1
    previous = None
    for n, value in enumerate(_model_orbit(alpha_eps, x)):
        if n > n_max:
            break
        if previous is not None and not value < previous:
            raise NumericDomainError(f"model orbit stopped decreasing at n = {n}")
        previous = value
        if not 0 < value < orbit_bound(alpha_eps, x, n):
            last_failure = n
    if last_failure == n_max:
        return None
    return last_failure + 1
