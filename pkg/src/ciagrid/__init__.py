"""Adaptive dyadic rounding grids and switching-cost-aware rounding.

The library decomposes relaxed mixed-integer control fields into
binary cellwise-constant controls: adaptive grid refinement drives the
control distance below a tolerance, sum-up rounding provides cheap
certificates, and the switching-cost rounding model picks the
feasible binary control with the cheapest mode interfaces.
"""

from .controls import (
    BinaryControl,
    ControlField,
    cell_average,
    cell_integral,
    field_distance,
    load_control,
    nonbinariness,
    pseudometric,
    save_control,
)
from .errors import (
    CiagridError,
    DepthExhausted,
    Infeasible,
    InfeasibleBounds,
    SizeLimit,
    StalledRefinement,
)
from .grid import (
    Adjacency,
    Cell,
    Domain,
    Grid,
    adjacency,
    initial_grid,
    load_grid,
    save_grid,
    split_cell,
    verify_admissible,
)
from .heuristic import Label, prefix_heuristic
from .refinement import RefinementResult, RefinementStep, refine_until
from .rounding import SurState, sur_steps, sur_variant
from .scarp import (
    Cut,
    ScarpInstance,
    build_instance,
    export_lp,
    objective_value,
    satisfies_windows,
    separate_all,
    separate_lattice,
    separate_parity,
)
from .solver import (
    SolveConfig,
    SolveReport,
    brute_force,
    check_cut,
    solve_exact,
)

__version__ = "0.1.0"
