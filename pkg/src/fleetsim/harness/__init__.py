from .config import PRESETS, ConfigError, ScenarioConfig, config_from_dict, load_config
from .experiment import ExperimentResult, MetricSeries, Sample, run_experiment, run_single
from .scenario import Scenario, build_scenario
from .telemetry import PortInUse, TelemetryServer, build_frame
