"""Cylinder functions (Bessel J, Hankel H1) and derivatives for integer order.

Arguments may be complex with nonnegative imaginary part (outgoing /
decaying branch). Values are returned together with the derivative with
respect to the full argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special as sp

MAX_ORDER = 200


class SpecialFunctionError(ValueError):
    """Argument outside the supported evaluation range."""


@dataclass(frozen=True)
class CylinderFunctionValue:
    value: complex
    derivative: complex


def _check_order(order: int) -> None:
    if abs(order) > MAX_ORDER:
        raise SpecialFunctionError(f"order {order} exceeds supported |m| <= {MAX_ORDER}")


def bessel_j(order: int, x: complex) -> CylinderFunctionValue:
    """Bessel function of the first kind J_m(x) and its derivative.

    Negative orders use J_{-m} = (-1)^m J_m.
    """
    _check_order(order)
    x = complex(x)
    if not np.isfinite(x):
        raise SpecialFunctionError(f"non-finite argument {x}")
    sign = 1.0
    m = order
    if m < 0:
        m = -m
        sign = (-1.0) ** m
    if x == 0:
        # Series at the origin: J_0(0) = 1, J_m(0) = 0, J'_m = (J_{m-1}-J_{m+1})/2.
        val = 1.0 + 0.0j if m == 0 else 0.0j
        der = 0.5 + 0.0j if m == 1 else 0.0j
        return CylinderFunctionValue(sign * val, sign * der)
    val = sp.jv(m, x)
    der = sp.jvp(m, x)
    if not (np.isfinite(val) and np.isfinite(der)):
        raise SpecialFunctionError(f"argument {x} out of supported range for J_{m}")
    return CylinderFunctionValue(sign * val, sign * der)


def hankel1(order: int, x: complex) -> CylinderFunctionValue:
    """Hankel function of the first kind H_m(x) = J_m + i Y_m and derivative.

    Requires x != 0 and Im x >= 0; negative orders use H_{-m} = (-1)^m H_m,
    and the derivative follows H'_m(x) = H_{m-1}(x) - (m/x) H_m(x).
    """
    _check_order(order)
    x = complex(x)
    if x == 0:
        raise SpecialFunctionError("Hankel function is singular at x = 0")
    if not np.isfinite(x):
        raise SpecialFunctionError(f"non-finite argument {x}")
    if x.imag < 0:
        raise SpecialFunctionError(f"Im x must be >= 0 for the outgoing branch, got {x}")
    sign = 1.0
    m = order
    if m < 0:
        m = -m
        sign = (-1.0) ** m
    val = sp.hankel1(m, x)
    der = sp.hankel1(m - 1, x) - (m / x) * val if m > 0 else -sp.hankel1(1, x)
    if not (np.isfinite(val) and np.isfinite(der)):
        raise SpecialFunctionError(f"argument {x} out of supported range for H_{m}")
    return CylinderFunctionValue(sign * val, sign * der)


def hankel1_many(orders: np.ndarray, x: complex) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized H_m(x), H'_m(x) over an array of integer orders at one argument."""
    orders = np.asarray(orders)
    vals = np.empty(orders.shape, dtype=complex)
    ders = np.empty(orders.shape, dtype=complex)
    for i, m in np.ndenumerate(orders):
        h = hankel1(int(m), x)
        vals[i], ders[i] = h.value, h.derivative
    return vals, ders
