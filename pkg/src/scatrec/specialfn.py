"""Self-contained special functions used by the scattering kernels.

Bessel J of low integer and half-integer order, Y0/Y1, the Hankel function
of the first kind and order zero, Gamma at half-integers, and an explicit
two-branch upper bound on |J_alpha|.

Everything here is scalar float64 and dependency-free.  Evaluation is split
into three regimes chosen for conditioning:

* ascending power series for small arguments,
* Miller's downward recurrence (integer orders) or the trigonometric
  closed forms of spherical Bessel functions (half-integer orders) for
  moderate arguments,
* Hankel's large-argument asymptotic expansion beyond that.
"""

from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061  # Euler-Mascheroni constant, 20 digits

#: all orders the package needs: d/2 + j for d in {2, 3}, j in {0..3}, plus 0
SUPPORTED_ORDERS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5)

_SQRT_PI = math.sqrt(math.pi)

_GAMMA_HALF_INTEGER = {
    1.0: 1.0,
    1.5: _SQRT_PI / 2.0,
    2.0: 1.0,
    2.5: 3.0 * _SQRT_PI / 4.0,
    3.0: 2.0,
    3.5: 15.0 * _SQRT_PI / 8.0,
}

# regime switch points; the series loses roughly two digits per unit of x
# past ~10 through cancellation, the asymptotic series bottoms out around
# exp(-2x), so the mid range is bridged by recurrences instead
_SERIES_MAX = 2.0
_ASYMPTOTIC_MIN = 25.0
_Y_SERIES_MAX = 13.0


def _check_order(order: float) -> float:
    order = float(order)
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported Bessel order {order}; supported: {SUPPORTED_ORDERS}")
    return order


def gamma_half_integer(k: float) -> float:
    """Gamma(k) for k in {1, 3/2, 2, 5/2, 3, 7/2}, in closed form."""
    k = float(k)
    if k not in _GAMMA_HALF_INTEGER:
        raise ValueError(f"gamma_half_integer only accepts {sorted(_GAMMA_HALF_INTEGER)}, got {k}")
    return _GAMMA_HALF_INTEGER[k]


def _gamma_order_plus_one(nu: float) -> float:
    # Gamma(nu + 1) for any supported order, via the recursion from
    # Gamma(1) = 1 or Gamma(1/2) = sqrt(pi)
    if nu == int(nu):
        return float(math.factorial(int(nu)))
    g = _SQRT_PI  # Gamma(1/2)
    z = 0.5
    while z < nu + 1.0 - 0.25:
        g *= z
        z += 1.0
    return g


def _bessel_series(nu: float, x: float, max_terms: int = 80) -> float:
    # ascending series sum_p (-1)^p (x/2)^(2p+nu) / (p! Gamma(p+nu+1));
    # well conditioned for x <= ~10, used here only below _SERIES_MAX
    half = 0.5 * x
    term = half**nu / _gamma_order_plus_one(nu)
    quarter_sq = half * half
    terms = [term]
    for p in range(1, max_terms):
        term *= -quarter_sq / (p * (p + nu))
        terms.append(term)
        if abs(term) < 1e-20 * abs(terms[0]):
            break
    return math.fsum(terms)


def _hankel_pq(nu: float, x: float) -> tuple[float, float]:
    # P and Q of the large-argument expansion
    # J_nu = sqrt(2/(pi x)) (P cos w - Q sin w), w = x - nu pi/2 - pi/4,
    # truncated at the smallest term
    mu = 4.0 * nu * nu
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    prev = math.inf
    for k in range(1, 40):
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        prev = abs(term)
        if k % 2 == 1:
            q_sum += term if k % 4 == 1 else -term
        else:
            p_sum += -term if k % 4 == 2 else term
        if abs(term) < 1e-18:
            break
    # sign pattern: P = 1 - a2/x^2 + a4/x^4 - ..., Q = a1/x - a3/x^3 + ...
    return p_sum, q_sum


def _bessel_asymptotic_j(nu: float, x: float) -> float:
    p, q = _hankel_pq(nu, x)
    w = x - nu * math.pi / 2.0 - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(w) - q * math.sin(w))


def _bessel_asymptotic_y(nu: float, x: float) -> float:
    p, q = _hankel_pq(nu, x)
    w = x - nu * math.pi / 2.0 - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.sin(w) + q * math.cos(w))


def _bessel_integer_mid(x: float, n: int) -> float:
    # Miller's downward recurrence with the normalization
    # J_0 + 2 J_2 + 2 J_4 + ... = 1; stable on the mid range
    start = int(x) + n + 42
    if start % 2 == 1:
        start += 1
    jp, j = 0.0, 1e-290
    wanted = 0.0
    norm = 0.0
    for k in range(start, 0, -1):
        jm = (2.0 * k / x) * j - jp
        jp, j = j, jm
        order = k - 1
        if order == n:
            wanted = j
        if order > 0 and order % 2 == 0:
            norm += 2.0 * j
        if abs(j) > 1e250:
            scale = 1e-250
            jp *= scale
            j *= scale
            wanted *= scale
            norm *= scale
    norm += j  # j now holds the order-0 value
    return wanted / norm


def _spherical_jn(n: int, x: float) -> float:
    # upward recurrence from the closed forms; stable for x > n
    s, c = math.sin(x), math.cos(x)
    j0 = s / x
    if n == 0:
        return j0
    j1 = s / (x * x) - c / x
    jkm1, jk = j0, j1
    for k in range(1, n):
        jkm1, jk = jk, (2 * k + 1) / x * jk - jkm1
    return jk


def bessel_j(order: float, x: float) -> float:
    """Bessel function of the first kind J_order(x) for the supported orders.

    x = 0 returns the series limit (1 for order 0, 0 otherwise).
    """
    order = _check_order(order)
    x = float(x)
    if x < 0.0:
        raise ValueError(f"bessel_j requires x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if order == 0.0 else 0.0
    if x <= _SERIES_MAX:
        return _bessel_series(order, x)
    if x >= _ASYMPTOTIC_MIN:
        return _bessel_asymptotic_j(order, x)
    if order == int(order):
        return _bessel_integer_mid(x, int(order))
    n = int(order - 0.5)
    return math.sqrt(2.0 * x / math.pi) * _spherical_jn(n, x)


def bessel_y0(x: float) -> float:
    """Bessel function of the second kind and order zero."""
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"bessel_y0 requires x > 0, got {x}")
    if x > _Y_SERIES_MAX:
        return _bessel_asymptotic_y(0.0, x)
    # log series: Y0 = (2/pi)[(log(x/2)+gamma) J0 + sum_{p>=1} (-1)^(p+1) H_p tau^p / (p!)^2]
    tau = 0.25 * x * x
    term = 1.0
    harmonic = 0.0
    pieces = []
    for p in range(1, 120):
        term *= tau / p
        harmonic += 1.0 / p
        contribution = (term / math.factorial(p)) * harmonic
        pieces.append(contribution if p % 2 == 1 else -contribution)
        if abs(contribution) < 1e-20:
            break
    j0 = bessel_j(0.0, x)
    return (2.0 / math.pi) * ((math.log(0.5 * x) + EULER_GAMMA) * j0 + math.fsum(pieces))


def bessel_y1(x: float) -> float:
    """Bessel function of the second kind and order one (used for H0' = -H1)."""
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"bessel_y1 requires x > 0, got {x}")
    if x > _Y_SERIES_MAX:
        return _bessel_asymptotic_y(1.0, x)
    # Y1 = (2/pi) log(x/2) J1 - 2/(pi x)
    #      - (x/(2 pi)) sum_k (psi(k+1)+psi(k+2)) (-tau)^k / (k! (k+1)!)
    tau = 0.25 * x * x
    psi1 = -EULER_GAMMA
    psi2 = 1.0 - EULER_GAMMA
    term = 1.0  # (-tau)^k / (k! (k+1)!)
    pieces = [psi1 + psi2]
    for k in range(1, 120):
        term *= -tau / (k * (k + 1))
        psi1 += 1.0 / k
        psi2 += 1.0 / (k + 1)
        pieces.append(term * (psi1 + psi2))
        if abs(term) < 1e-22:
            break
    j1 = bessel_j(1.0, x)
    return (
        (2.0 / math.pi) * math.log(0.5 * x) * j1
        - 2.0 / (math.pi * x)
        - (x / (2.0 * math.pi)) * math.fsum(pieces)
    )


def hankel1_0(x: float) -> complex:
    """Hankel function of the first kind and order zero, H0(x) = J0(x) + i Y0(x)."""
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"hankel1_0 requires x > 0 (logarithmic singularity at 0), got {x}")
    return complex(bessel_j(0.0, x), bessel_y0(x))


def hankel1_1(x: float) -> complex:
    """Hankel function of the first kind and order one, H1(x) = J1(x) + i Y1(x)."""
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"hankel1_1 requires x > 0, got {x}")
    return complex(bessel_j(1.0, x), bessel_y1(x))


def bessel_upper_bound(order: float, x: float) -> float:
    """Two-branch upper bound on |J_order(x)| for order > 0, x > 0.

    Minimum of the truncated-series remainder expression and 0.8 x^(-1/3).
    """
    order = _check_order(order)
    if order <= 0.0:
        raise ValueError("bessel_upper_bound requires order > 0")
    x = float(x)
    if x <= 0.0:
        raise ValueError("bessel_upper_bound requires x > 0")
    decay_branch = 0.8 * x ** (-1.0 / 3.0)
    t = 0.25 * x * x
    if t > 700.0:  # exp overflow; the series branch is useless there anyway
        return decay_branch
    lead = (0.5 * x) ** order / _gamma_order_plus_one(order)
    series_branch = lead * (
        abs(1.0 - t / (order + 1.0))
        + (math.expm1(t) - t) / ((order + 1.0) * (order + 2.0))
    )
    return min(series_branch, decay_branch)
