"""Bundled benchmark source models and candidate lag sets.

Models "a" through "d" are the efficiency-comparison suite used by the
acceptance tests and the CLI: three MA(10) components, three sparse AR
components with matched coefficient 0.6 at increasing delays, three
ARMA(3, 6) components, and three AR(1) components.  All use normal
innovations and unit-variance scaling.
"""

from __future__ import annotations

from .signal_model import SourceSpec

__all__ = ["benchmark_model", "lag_preset", "BENCHMARK_MODELS", "LAG_PRESETS"]

BENCHMARK_MODELS: dict[str, tuple[SourceSpec, ...]] = {
    "a": (
        SourceSpec("ma", ma=(0.8, 3.8, 1.2, 1.4, 1.1, 0.5, 0.7, 0.3, 0.5, 1.8)),
        SourceSpec("ma", ma=(-0.6, 1.3, -0.1, 1.3, 1.6, 0.4, 0.5, -0.4, 0.1, 2.8)),
        SourceSpec("ma", ma=(-0.4, -1.5, 0.0, -1.1, -1.9, 0.0, -0.7, -0.4, -0.2, 0.4)),
    ),
    "b": (
        SourceSpec("ar", ar=(0.6,)),
        SourceSpec("ar", ar=(0.0, 0.6)),
        SourceSpec("ar", ar=(0.0, 0.0, 0.6)),
    ),
    "c": (
        SourceSpec("arma", ar=(0.3, 0.3, -0.4), ma=(-0.6, 0.3, 1.1, 1.0, -1.1, -0.3)),
        SourceSpec("arma", ar=(0.2, 0.1, -0.4), ma=(1.2, 2.8, -1.0, -1.0, 0.1, 0.1)),
        SourceSpec("arma", ar=(0.2, 0.2, 0.4), ma=(-1.4, -1.9, -0.5, -0.3, -0.4, 0.4)),
    ),
    "d": (
        SourceSpec("ar", ar=(0.6,)),
        SourceSpec("ar", ar=(0.4,)),
        SourceSpec("ar", ar=(0.2,)),
    ),
}

# Candidate lag sets for separations of slow-vs-fast structure, as used in
# the lag-selection workflow; preset 2 focuses on short lags, preset 4 on
# long ones, presets 1 and 3 span both.
LAG_PRESETS: dict[str, tuple[int, ...]] = {
    "preset1": tuple(range(1, 11)) + tuple(range(12, 21, 2))
    + tuple(range(25, 101, 5)) + tuple(range(120, 301, 20)),
    "preset2": tuple(range(1, 11)) + tuple(range(12, 21, 2)),
    "preset3": tuple(range(1, 11)) + tuple(range(12, 21, 2))
    + tuple(range(25, 101, 5)),
    "preset4": tuple(range(25, 101, 5)) + tuple(range(120, 301, 20)),
}


def benchmark_model(name: str) -> tuple[SourceSpec, ...]:
    """Source specs of one bundled benchmark model ("a".."d")."""
    try:
        return BENCHMARK_MODELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown benchmark model {name!r}") from None


def lag_preset(name: str) -> tuple[int, ...]:
    """One of the bundled candidate lag sets ("preset1".."preset4")."""
    try:
        return LAG_PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown lag preset {name!r}") from None
