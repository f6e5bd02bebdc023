"""medgym: probe-navigation and emergency-care RL environments with a
line-protocol harness."""

from .errors import EpisodeError, FormatError, MedgymError, ValidationError
from .events import ActionId, EventId, EventTrace, MeasurementId, encode_observation
from .geometry import ProbePose, SampleGrid, SliceObservation, clamp_to_surface, pose_axes, render_slice
from .imagym import ImagymConfig, ImagymEnv, quality
from .resus import (
    PatientState,
    ResusConfig,
    ResusEnv,
    ScenarioSpec,
    bundled_scenarios,
    get_scenario,
    load_scenario,
    save_scenario,
    success,
)
from .volume import (
    Ellipsoid,
    PhantomSpec,
    Volume,
    generate_phantom,
    load_volume,
    organ_volume,
    save_volume,
)

__version__ = "0.1.0"
