"""Pinned experiment presets over the three-UE reference system.

The reference system: one AoI UE (q=0.9, p=0.7, rho=1), one latency UE
(q=0.2, p=0.8), one throughput UE (p=0.9).  Presets differ in which
constraint is swept and which policy runs; each preset yields CSV rows plus
a set of threshold checks used by the ``reproduce`` command.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Scenario, UeClass, UeConfig, Variant

ALPHA_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
BETA_GRID = [1.2, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
WEIGHT_BETAS = [1.0, 2.0, 5.0]


def reference_weighted(alpha: float = 0.2) -> Scenario:
    return Scenario(ues=(
        UeConfig(id=1, cls=UeClass.AOI, q=0.9, p=0.7, rho=1.0),
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, rho=1.0),
        UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=alpha),
    ), variant=Variant.LATENCY_WEIGHTED)


def reference_constrained(beta: float = 2.0, alpha: float = 0.2) -> Scenario:
    return Scenario(ues=(
        UeConfig(id=1, cls=UeClass.AOI, q=0.9, p=0.7, rho=1.0),
        UeConfig(id=2, cls=UeClass.LATENCY, q=0.2, p=0.8, beta=beta),
        UeConfig(id=3, cls=UeClass.THROUGHPUT, p=0.9, alpha=alpha),
    ), variant=Variant.LATENCY_CONSTRAINED)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    scenario: Scenario
    param: str
    grid: tuple[float, ...]
    policies: tuple[str, ...]


PRESETS = {
    "fig4": ExperimentPreset("fig4", reference_weighted(), "alpha",
                             tuple(ALPHA_GRID), ("hier",)),
    "fig5_cost": ExperimentPreset("fig5_cost", reference_weighted(), "alpha",
                                  tuple(ALPHA_GRID), ("hier",)),
    "fig5_weights": ExperimentPreset("fig5_weights", reference_constrained(), "beta",
                                     tuple(WEIGHT_BETAS), ("vw",)),
    "fig6": ExperimentPreset("fig6", reference_constrained(), "beta",
                             tuple(BETA_GRID), ("vw", "rd")),
    "fig8": ExperimentPreset("fig8", reference_constrained(), "beta",
                             tuple(BETA_GRID), ("vw", "rd")),
}
