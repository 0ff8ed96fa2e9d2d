"""burstlab: tile dataflow analysis, layout ordering, delta compression, and
burst-bus transfer simulation for iterative stencil kernels.

The package is organized around one pipeline:

    kernel/tiling model -> atomic transfer-set extraction -> memory layout
    ordering -> bit-packed delta codec -> bus transfer planning -> end-to-end
    tiled simulation with bit-exact verification.

A FastAPI service (`burstlab.service`) exposes each stage as a stateless
endpoint and the command line client (`burstlab.cli`) talks to it, by default
through an in-process transport.
"""

__version__ = "0.1.0"

from .kernel import (
    DataTypeSpec,
    IllegalTiling,
    Kernel,
    ProblemInstance,
    TilingScheme,
    enumerate_tile_points,
    legal_tile_schedule,
    tile_of,
)
from .mars import Mars, TileIOSummary, consumer_signature, extract_input_map, extract_output_mars, verify_partition
from .layout import (
    AllocationMap,
    LayoutOrder,
    TooManyMars,
    WeightMatrix,
    allocate_blocks,
    build_weights,
    count_read_bursts,
    solve_layout_exact,
    solve_layout_greedy,
)
from .codec import CompressedBlock, CorruptBlock, Marker, compress_mars, decompress_mars, delta_token, pack_block, seek_mars
from .membus import BusConfig, Transfer, TransferLog, burst_cycles
from .sim import SimReport, run_reference, run_tiled

__all__ = [name for name in dir() if not name.startswith("_")]
