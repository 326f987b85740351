"""Shared numerical checks for the test suite."""

import numpy as np

# A current built from terms of size |psi| |psi'| that cancel to this relative
# level is identically zero; its relative constancy is then undefined (0/0).
ZERO_CURRENT_LEVEL = 1e-10


def term_scale(psi, dpsi):
    return float(np.max(np.abs(psi)) * np.max(np.abs(dpsi)))


def constancy_ratio(slope, values, L, terms):
    """max|Q'| / (max|Q| / L), or None when Q vanishes identically."""
    qmax = float(np.max(np.abs(values)))
    if qmax < ZERO_CURRENT_LEVEL * terms:
        return None
    return float(np.max(np.abs(slope))) / (qmax / L)


def assert_constant(slope, values, L, terms, bound):
    ratio = constancy_ratio(slope, values, L, terms)
    if ratio is None:
        # an identically vanishing current is trivially constant; its slope
        # must sit at the same roundoff level
        assert np.max(np.abs(slope)) < ZERO_CURRENT_LEVEL * terms
    else:
        assert ratio < bound, f"max|Q'| is {ratio:.3e} x max|Q|/L, bound {bound:g}"


# (criterion number, title, passed, detail) lines printed in the terminal summary
ACCEPTANCE = []


def record(number, title, passed, detail):
    ACCEPTANCE.append((number, title, bool(passed), detail))
    assert passed, f"criterion {number} ({title}): {detail}"
