"""Hot-loop kernels: compiled extension when available, numpy fallback otherwise.

Both backends implement identical floating-point predicates; the selection
only affects speed. ``BACKEND`` names the active implementation.
"""

try:
    from ._speedups import greedy_pack, pair_first_violation
    HAVE_SPEEDUPS = True
    BACKEND = "compiled"
except ImportError:  # extension not built
    from ._fallback import greedy_pack, pair_first_violation
    HAVE_SPEEDUPS = False
    BACKEND = "fallback"

__all__ = ["greedy_pack", "pair_first_violation", "HAVE_SPEEDUPS", "BACKEND"]
