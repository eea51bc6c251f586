"""Small integer helpers shared across modules."""
import math


def clog2(x: int) -> int:
    """Ceiling of log2 for a positive integer (clog2(1) == 0)."""
    if x < 1:
        raise ValueError("clog2 needs a positive integer")
    return (x - 1).bit_length()


def lg(n: int) -> int:
    """ceil(log2 n) clamped to at least 1, so degenerate graphs still get usable parameters."""
    return max(1, clog2(max(1, n)))


def clog43(n: int) -> int:
    """Smallest k >= 0 with (4/3)^k >= n, computed exactly with integers."""
    k, num, den = 0, 1, 1
    while num < n * den:
        num *= 4
        den *= 3
        k += 1
    return k


def log_star(x: float) -> int:
    """Number of times log2 must be applied before the value drops to <= 1."""
    k = 0
    while x > 1:
        x = math.log2(x)
        k += 1
    return k


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)
