"""Episode configuration shared by the coordinator, explorer and engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

G1_GO2 = "g1_go2"
G1_ONLY = "g1_only"


@dataclass(frozen=True)
class SimConfig:
    """Kinematic limits, simulated-time model and episode switches.

    The four motion parameters keep their standard defaults (2 m and pi/2
    per turn, 0.5 m achievement radius, pi/2 probe half-angle); speeds,
    latency and the turn budget are simulation plumbing.
    """
    d_max: float = 2.0
    r_max: float = math.pi / 2
    d_achieve: float = 0.5
    r_scan: float = math.pi / 2
    humanoid_speed: float = 0.5
    quadruped_speed: float = 1.0
    angular_speed: float = 1.0
    oracle_latency: float = 0.0
    turn_budget: int = 60
    seed: int = 0
    mode_override: Optional[str] = None
    agents: str = G1_GO2
    disable_mode_x: bool = False
    disable_mode_y: bool = False

    def __post_init__(self):
        for name in ("d_max", "r_max", "d_achieve", "r_scan", "humanoid_speed",
                     "quadruped_speed", "angular_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.oracle_latency < 0:
            raise ValueError("oracle_latency must be non-negative")
        if self.turn_budget < 1:
            raise ValueError("turn_budget must be at least 1")
        if self.agents not in (G1_GO2, G1_ONLY):
            raise ValueError(f"unknown agents setting {self.agents!r}")
        if self.mode_override not in (None, "X", "Y"):
            raise ValueError(f"mode_override must be X, Y or None")
        if self.disable_mode_x and self.disable_mode_y:
            raise ValueError("cannot disable both exploration modes")

    def forced_mode(self) -> Optional[str]:
        """Mode imposed by ablation switches or an explicit override."""
        if self.mode_override:
            return self.mode_override
        if self.disable_mode_x:
            return "Y"
        if self.disable_mode_y:
            return "X"
        return None

    def speed_of(self, agent_class: str) -> float:
        from .geometry import HUMANOID

        return self.humanoid_speed if agent_class == HUMANOID else self.quadruped_speed
