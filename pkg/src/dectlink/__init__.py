"""Link-level simulator for the DECT-2020 NR physical layer."""

__version__ = "0.1.0"

from .numerology import (  # noqa: E402,F401
    McsEntry,
    MCS_TABLE,
    Modulation,
    NumerologyConfig,
    PacketFormat,
    derive_numerology,
    format0,
    format1,
    format2,
    packet_grid_dimensions,
    payload_capacity_bits,
    preset_format,
)
from .harness import (  # noqa: E402,F401
    ExperimentSpec,
    SweepResult,
    load_results,
    persist_results,
    preset_experiments,
    run_sweep,
)
from .link import LinkSimulator  # noqa: E402,F401
