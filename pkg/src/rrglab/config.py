"""Global caps and defaults.  Every size limit the package enforces lives here."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Caps:
    # Exhaustive labeled enumeration.  Runtime grows roughly with |G_d(n)|:
    # (8,3) ~0.5 s, (10,3) is 1.1e7 graphs and is only reached through counting.
    oracle_n: int = 12
    oracle_degree_sum: int = 5
    # Explicit listing of labeled graphs is refused above this many outputs.
    listing_limit: int = 2_000_000
    pm_exact_n: int = 28
    one_factor_n: int = 16
    rejection_budget: int = 1_000_000
    # Largest d for the configuration-model sampler; acceptance ~ exp(-(d^2-1)/4).
    sampler_max_degree: int = 8
    # Reading of "dn - |E(H)| = Omega(dn)": |E(H)| <= fraction * dn.
    edge_prob_fraction: float = 0.5
    zeta_max_steps: int = 10_000
    graph_n_max: int = 10_000


@dataclass
class Defaults:
    block_size: int = 1000
    significance: float = 1e-3
    mckay_epsilon: float = 0.66


CAPS = Caps()
DEFAULTS = Defaults()
