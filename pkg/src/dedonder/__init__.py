"""De Donder form and Ostrogradski momenta for second-order metric Lagrangians.

Every quantity is evaluated numerically with truncated multivariate Taylor
arithmetic, so identities can be checked against independent routes.
"""

from .jet_space import JetPoint, JetTangentVector, MetricFamily, prolong
from .lagrangians import HILBERT, MatterState
from .ostrogradski import Momenta, momenta_on_jet, momenta_on_section

__version__ = "0.1.0"

__all__ = ["JetPoint", "JetTangentVector", "MetricFamily", "prolong", "HILBERT", "MatterState",
           "Momenta", "momenta_on_jet", "momenta_on_section", "__version__"]
