"""End-to-end orchestration, configuration and the synthetic corpus."""
from .config import (KEYS, default_config, describe_config, load_config, stage_seed,
                     validate_config)
from .stages import (STAGES, MissingArtifact, Workspace, majority_baseline, run_all, run_stages,
                     stage_classify, stage_features, stage_forecast, stage_label, strip_timing)
from .synth import ARCHETYPES, EXPECTED_WINNER, SynthSpec, synth_corpus, synth_series

__all__ = [
    "KEYS", "default_config", "describe_config", "load_config", "stage_seed", "validate_config",
    "STAGES", "MissingArtifact", "Workspace", "majority_baseline", "run_all", "run_stages",
    "stage_classify", "stage_features", "stage_forecast", "stage_label", "strip_timing",
    "ARCHETYPES", "EXPECTED_WINNER", "SynthSpec", "synth_corpus", "synth_series",
]
