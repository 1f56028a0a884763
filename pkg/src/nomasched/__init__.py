"""Temporally fair threshold-based scheduling for downlink NOMA.

Monte-Carlo simulator, threshold adaptation, exact feasibility-region
computation, and an exact-arithmetic oracle for finite-support instances.
"""

__version__ = "0.1.0"
