"""2D t-V lattice fermions and their nodal/antinodal effective model."""

__version__ = "0.1.0"

from .params import (  # noqa: E402
    CutoffWindow,
    EffectiveParams,
    MicroParams,
    Momentum,
    UnstableCouplingError,
    band_energy,
    coupling_for_gamma,
    derive_effective_params,
    gamma_of,
    linearized_band,
    reduce_to_bz,
    stability_check,
)
from .zones import (  # noqa: E402
    REGIONS,
    BZGrid,
    PartitionError,
    RegionIndex,
    RegionMap,
    classify,
    filling_fractions,
    q_point,
    region_map,
    window_sizes,
)
from .fock import FockBasis  # noqa: E402
from .ed import (  # noqa: E402
    LatticeSpec,
    build_htv,
    cdw_order,
    ground_state,
    ph_transform_check,
)
from .bosons import (  # noqa: E402
    KAPPA,
    BosonGrid,
    DispersionResult,
    QuadraticBosonForm,
    ThermoResult,
    closed_form_dispersion,
    effective_antinodal_couplings,
    free_energy,
    ground_constant,
    numeric_dispersion,
)
from .verify import (  # noqa: E402
    TruncatedChiralSpace,
    VerifyReport,
    build_density,
    hn_equivalence_check,
    kronig_check,
    schwinger_check,
    schwinger_sweep,
)
from .meanfield import (  # noqa: E402
    AntinodalGrid,
    GapSolution,
    bisect_gap,
    gap_phase_scan,
    mf_bands,
    solve_gap,
)
