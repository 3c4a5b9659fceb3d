"""careerflow: temporal career-transition networks.

Builds yearly employer flow graphs from employment records, reweights
edges by mover expertise, employer retention, and relative growth, ranks
organizations with weighted HITS over sliding windows, and extracts
features to predict individual career transitions.
"""

from careerflow.model import (
    CareerTrajectory,
    Corpus,
    EmploymentSpell,
    FeatureVector,
    FlowNetwork,
    Organization,
    RankingTable,
    Sector,
    Transition,
    TransitionKind,
    truncate_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "CareerTrajectory",
    "Corpus",
    "EmploymentSpell",
    "FeatureVector",
    "FlowNetwork",
    "Organization",
    "RankingTable",
    "Sector",
    "Transition",
    "TransitionKind",
    "truncate_corpus",
    "__version__",
]
