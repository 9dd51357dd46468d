"""Line-of-sight regions for mmWave UAV links under cuboid building blockage."""

from .analytic import AnalyticLos, BlockageStats, LinkGeom, xi, xi_closed_form
from .assoc import (
    AssociationResult,
    CoverageDisk,
    EmbbAssociator,
    MaxThroughputAssociator,
    UrllcAssociator,
    associate_embb,
    associate_max_throughput,
    associate_urllc,
)
from .base import LosBackend, LosReport
from .bench import SweepSpec, emit_plot, load_sweep_spec, run_episode, run_sweep
from .channel import ChannelParams, path_loss_db, rx_power_dbm, throughput_bps
from .exceptions import (
    DegenerateInput,
    InvalidDistance,
    InvalidParams,
    OriginOccluded,
    ParseError,
    UavLosError,
    VertexAboveUav,
)
from .geometry import Cuboid, Polygon, convex_hull, segment_blocked_3d, triangulate, visibility_polygon
from .gridlos import GridLos
from .scene import Mobility, Region, Scene, SceneParams, Uav, User, advance_users, generate_scene
from .scenefile import load_scene, save_scene
from .shadowcast import ShadowMap, ShadowPolygonLos, build_shadow_map

__version__ = "0.1.0"
