from .reports import load_report, print_summary, report_schema, validate_report, write_run
from .runner import EXIT_BACKFLOW, EXIT_CP_DIVISIBLE, EXIT_ERROR, RunReport, build_family, run
from .scenario import PipelineFlags, ScenarioConfig, WitnessSettings, load_scenario, scenario_from_dict
