"""Transfer systems on finite G-lattices, counted as formal concepts."""

from .cbo import Concept, CounterOverflow, count_concepts, derive_down, derive_up, enumerate_concepts
from .context import (
    FormalContext,
    RelationPair,
    build_reduced_context,
    codensity,
    density,
    export_fimi,
    export_pbm,
    import_fimi,
    is_reduced,
    nontrivial_relation_orbits,
    sort_rows_for_cbo,
)
from .groups import PermGroup, Subgroup, enumerate_subgroups, parse_group_spec, subgroup_lattice
from .lattice import (
    GLattice,
    build_boolean,
    build_chain,
    build_product,
    build_subspace_lattice,
    dual,
    parse_lattice_spec,
    validate,
)

__version__ = "0.1.0"
