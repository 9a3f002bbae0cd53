"""Integer money arithmetic.

All monetary quantities are held internally as integers in units of 1e-4
cents, so that utility sums, matching ties, and protocol comparisons are
exact.  Conversion to cents happens only at I/O boundaries (JSON, CSV,
human-readable summaries).
"""

from __future__ import annotations

Money = int

# Integer money units per cent.
MONEY_SCALE = 10_000


def money_from_cents(cents: float) -> Money:
    """Quantize a cent amount to the internal integer unit (round half to even)."""
    return round(cents * MONEY_SCALE)


def money_to_cents(amount: Money) -> float:
    return amount / MONEY_SCALE


def format_cents(amount: Money) -> str:
    """Exact decimal rendering in cents, always with 4 fractional digits."""
    sign = "-" if amount < 0 else ""
    whole, frac = divmod(abs(amount), MONEY_SCALE)
    return f"{sign}{whole}.{frac:04d}"
