"""Simulator and live telemetry hub for wireless resistive tactile matrices."""

from .channel import DeliveryOutcome, Medium, ProtocolModel, Trace, builtin_protocol, run_scenario
from .config import CalibrationSettings, DeviceConfig, parse_config, parse_devices, serialize_config
from .errors import (
    CalibrationError,
    CodecError,
    ConfigError,
    CrcMismatchError,
    EncodeRangeError,
    GeometryError,
    OptimizationError,
    ProtocolMismatchError,
    RecordingError,
    TactileError,
    TruncatedPacketError,
)
from .firmware import (
    CalibrationResult,
    DeviceMode,
    DeviceState,
    calibrate,
    device_step,
    predict_frame,
    read_node,
    scan_array,
    should_send,
)
from .optimizer import (
    OptimizationSurface,
    evaluate_params,
    export_surface,
    grid_search,
    grid_search_recording,
    load_surface,
)
from .power import (
    PowerProfile,
    avg_current_ma,
    builtin_power_profile,
    extension_pct,
    lifetime_hours,
    lifetime_table,
    load_power_profile,
)
from .receiver import DeviceSession, SessionRecorder, nrmse, replay
from .recording import (
    RecordingHeader,
    RecordingWriter,
    export_csv,
    export_json,
    iter_recording,
    read_recording,
    write_recording,
)
from .scenarios import ScenarioSpec, load_scenario
from .sensor import (
    AdaptiveModule,
    MatrixModel,
    StimulusEvent,
    StimulusRenderer,
    StimulusScript,
    adaptive_transfer,
    adc_quantize,
    load_stimulus,
    node_raw_voltage,
)
from .wire import Frame, decode_packet, encode_packet, packet_size

__version__ = "0.1.0"
