"""Z-estimation and the Z-process method for change-point testing."""

from .limits import CritTable, DimensionMismatch, kolmogorov_cdf, p_value, simulate_sup_bridge
from .numerics import (
    NoConvergence,
    NotPositiveDefinite,
    NumericalError,
    RngStream,
    SingularJacobian,
    cholesky,
    newton_solve,
    quad_form,
    standard_normals,
)
from .zcore import (
    EstimatingFunctionSpec,
    InsufficientData,
    TestReport,
    ZPath,
    changepoint_estimate,
    information_hat,
    run_test,
    solve_z_estimator,
    test_statistic,
    z_process,
)

__version__ = "0.1.0"


def schema(name: str) -> dict:
    """Load a published JSON schema: ``test_report``, ``critval`` or ``mc_report``."""
    import json
    from importlib.resources import files

    return json.loads(files(__package__).joinpath("schemas", f"{name}.schema.json").read_text())
