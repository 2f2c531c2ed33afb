"""Infinitesimal, static, prestress and second-order rigidity of rigid origami."""
from ._errors import AnalysisError, GeometryWarning, ModelError, OrigamiError
from .barjoint import (
    BarJointFramework,
    correspondence_check,
    double_cone,
    framework_first_order_rigid,
    framework_rigidity_matrix,
    framework_resolve,
    general_load_resolve,
)
from .consistency import is_consistent, residual, residual_vector
from .derivatives import (
    assemble_hessian,
    assemble_jacobian,
    constraint_system,
    tangent_substitution,
)
from .fixtures import fixture_names, load_fixture
from .kernels import BACKEND
from .model import (
    CreasedPaper,
    Crease,
    Panel,
    SingleUnit,
    Vertex,
    build_incidence,
    creased_paper_from_dict,
    creased_paper_to_dict,
    extract_single_units,
    load_creased_paper,
)
from .stability import (
    energy_report,
    extend_to_second_order,
    find_stabilizing_stress,
    is_prestress_stable,
    second_order_classify,
)
from .statics import (
    classify_static,
    counting_report,
    first_order_flexes,
    load_is_orthogonal,
    rank,
    resolve_load,
    self_stresses,
)
from .tolerances import DEFAULT as DEFAULT_TOLERANCES, Tolerances

__version__ = "0.1.0"
