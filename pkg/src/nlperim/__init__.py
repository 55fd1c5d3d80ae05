"""nlperim: a numerical laboratory for nonlocal perimeters on Carnot groups.

Exact group arithmetic in exponential coordinates, homogeneous gauges,
membership-oracle regions with polynomial ray cuts, and seeded Monte Carlo
estimators for interaction energies, nonlocal perimeters, calibrations,
coarea identities and rescaled-functional scans.
"""

__version__ = "0.1.0"

from .groups import StratifiedGroup, group_from_name, group_from_spec, heisenberg
from .norms import HomogeneousNorm, norm_from_spec
from .kernels import (
    Kernel,
    fractional_kernel,
    infcappa_check,
    integrability_check,
    kernel_from_spec,
)
from .regions import (
    Box,
    ClampAffineField,
    Complement,
    HalfSpace,
    IndicatorField,
    Intersection,
    NestedLevelField,
    NormBall,
    PatchField,
    Region,
    ScalarField,
    Union,
    VoxelRegion,
    interval,
    region_from_spec,
)
from .sampling import Estimate, McConfig
from .engine import (
    interaction,
    mean_curvature,
    mean_curvature_field,
    nonlocal_energy,
    nonlocal_perimeter,
    rescaled_inner_energy,
    rescaled_perimeter,
)
from .geometry import euclidean_ball, horizontal_perimeter, symdiff_volume, theta
from .calibration import (
    AffineFoliation,
    HalfspaceCalibration,
    antisymmetrize,
    calibrating_functional,
    calibration_identity_check,
    calibration_pv_check,
    foliation_check,
)
from .coarea import (
    CompetitorSpec,
    coarea_check,
    generate_competitors,
    level_selection,
    minimality_experiment,
)
from .scaling import (
    cell_energy_upper,
    classical_limit_scan,
    gamma_liminf_check,
    isometry_invariance_check,
    liminf_density,
)

__all__ = [name for name in dir() if not name.startswith("_")]
