"""fiberchi: Euler characteristics of fibration stages of polynomial map-germs.

The library has three layers.  :mod:`fiberchi.germs` represents real
polynomial map-germs exactly and evaluates them fast.  The pair
:mod:`fiberchi.spaces` / :mod:`fiberchi.formulas` computes every stage
Euler characteristic symbolically, each value through independent
routes that must agree.  :mod:`fiberchi.sampling` and
:mod:`fiberchi.estimator` rebuild the same numbers numerically from
point clouds, so the closed forms can be checked against geometry.
"""

__version__ = "1.0.0"

from .catalog import ENTRIES as CATALOG  # noqa: F401
from .catalog import CatalogEntry, CatalogError  # noqa: F401
from .estimator import (  # noqa: F401
    ChiEstimate,
    ComplexStats,
    chi_scan,
    estimate_stage,
    rips_chi,
    target_dimension,
    write_scan_svg,
)
from .formulas import (  # noqa: F401
    FormulaHypothesisError,
    InvariantBreach,
    StageReport,
    boundary_equals_link_criterion,
    build_stage_report,
    chi_boundary,
    chi_boundary_f,
    chi_link,
    db_invariant,
    le_greuel_boundary,
    le_greuel_link,
    run_identity_grid,
)
from .germs import (  # noqa: F401
    GermError,
    GermParseError,
    MapGerm,
    PolyMap,
    Polynomial,
    StageMaps,
    load_germ,
    numerical_rank,
    parse_germ,
    parse_polynomial,
    rank_profile,
    stage,
)
from .sampling import (  # noqa: F401
    EmptySampleError,
    OpenBookSample,
    PointCloud,
    Radii,
    RadiusSearchError,
    SamplingError,
    choose_radii,
    sample_boundary,
    sample_fiber,
    sample_link,
    sample_openbook_page,
    tameness_evidence,
)
from .spaces import CHI_F, ChiValue, chi, chi_sphere, pretty  # noqa: F401
