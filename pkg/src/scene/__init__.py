from .models import (
    LightUnit,
    ReceiverBranch,
    Room,
    Scenario,
    SolverOptions,
    SurfaceElement,
    UserPlacement,
    Vec3,
    Wavelength,
    WavelengthBand,
    validate_scenario,
)
from .geometry import SurfaceMesh, branch_normal, discretize, mesh_surfaces
from .parser import ScenarioParser, canonical_json, dump_scenario, load_scenario, scenario_hash, scenario_to_dict
from .builtin import BUILTIN_NAMES, ReferenceLink, builtin_scenario, is_builtin, reference_assignment, truncate_users
