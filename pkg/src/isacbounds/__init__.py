"""Error bounds for target position and velocity estimation in networks of
OFDM MIMO sensing base stations (monostatic, bistatic, multistatic, mixed)."""

from .bounds import (
    BoundReport,
    SensingLink,
    evaluate_bounds,
    network_peb,
    network_position_efim,
    network_velocity_bounds,
    network_velocity_bounds_exact,
    node_velocity_efim,
    peb_bis_closed,
    peb_mono_closed,
    sensing_links,
)
from .engine import (
    GridSpec,
    McConfig,
    SelectionProblem,
    dump_scenario,
    heatmap,
    load_scenario,
    normalize_power,
    select_nodes,
    select_tx,
    sweep,
)
from .link import (
    FisherMatrix,
    LinkGeometry,
    efim_delay_angle,
    efim_doppler_delay_angle,
    fim_single_link,
    link_snr,
    scalar_crlbs,
    schur_complement,
)
from .model import (
    ConstellationSpec,
    Node,
    Scenario,
    SystemParams,
    TargetState,
    constellation_penalty,
    derive_frame,
)

__version__ = "0.1.0"
