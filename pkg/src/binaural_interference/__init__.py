"""Multi-channel binaural detection model with across-channel incoherence interference."""
from .binaural import (ChannelCorrelations, InterferenceParams, channel_correlation, decision_variable,
                       dprime_binaural, interfere)
from .decision import TaskSpec, combine, dprime_at_threshold, find_threshold, SweepResult
from .experiments import ExperimentSpec, ThresholdCurve, run_ablation, run_experiment, score
from .filterbank import ErbGrid, GammatoneFilter, build_grid, erb_of, filter_stereo
from .model import TABLE1, ConditionModel, ModelParams, Simulation
from .monaural import channel_power, dprime_monaural
from .stimuli import MaskerKind, MaskerSpec, StereoSignal, TargetSpec, gen_masker, gen_target, mix

__version__ = "0.1.0"
