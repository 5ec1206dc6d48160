"""Shared parameter sets and hypothesis strategies for the test suite."""

from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import strategies as st

from nit_sim import SystemParams


def matched_system(**overrides) -> SystemParams:
    """Equal couplings lam = g = 0.5: three absorption peaks, two deep dips."""
    base = SystemParams(
        delta_p=0.0,
        lam=0.5,
        g=0.5,
        epsilon=0.03,
        kappa_a=1.0,
        kappa_b=1e-3,
        gamma=1e-3,
        gamma_phi=1e-3,
    )
    return replace(base, **overrides) if overrides else base


def unbalanced_system(**overrides) -> SystemParams:
    """lam >> g: a narrow central window between close-in dips."""
    return matched_system(**{"lam": 1.0, "g": 0.15, **overrides})


def weak_drive_system(**overrides) -> SystemParams:
    """Matched couplings at a drive weak enough for small Fock truncations."""
    return matched_system(**{"epsilon": 0.01, **overrides})


def decoupled_system(**overrides) -> SystemParams:
    """lam = g = 0: the driven mode alone, a bare Lorentzian response."""
    return matched_system(**{"lam": 0.0, "g": 0.0, **overrides})


_fin = dict(allow_nan=False, allow_infinity=False)


@st.composite
def damped_systems(draw) -> SystemParams:
    """Random normalized parameter sets with strict damping everywhere."""
    coupling = st.floats(0.0, 2.0, **_fin)
    rate = st.floats(1e-3, 2.0, **_fin)
    small = st.floats(-0.5, 0.5, **_fin)
    amp = st.floats(-0.1, 0.1, **_fin)
    return SystemParams(
        delta_p=draw(st.floats(-3.0, 3.0, **_fin)),
        lam=draw(coupling),
        g=draw(coupling),
        epsilon=complex(draw(amp), draw(amp)),
        kappa_a=1.0,
        kappa_b=draw(rate),
        gamma=draw(rate),
        gamma_phi=draw(rate),
        delta_b_offset=draw(small),
        delta_q_offset=draw(small),
    )


@pytest.fixture
def report(capsys):
    """Print a line that survives pytest's output capture."""

    def emit(line: str) -> None:
        with capsys.disabled():
            print(line)

    return emit
