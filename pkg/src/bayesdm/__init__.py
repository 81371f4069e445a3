"""Interpretable symptom-inquiry dialogue manager.

A differentiable Bayesian network infers a disease posterior from observed
symptoms each turn; two interpretable matrices, gated by a learned switch,
pick the next symptom to query; the whole pipeline trains end to end with
advantage actor-critic RL against a user simulator.
"""

from .autodiff import DomainError, Tape, Var
from .bayesnet import (BayesParams, DiseaseSymptomGraph, Evidence, brute_force_posterior,
                       build_graph, infer, init_params, posterior_values)
from .data import (Catalog, CooccurrenceCounts, PatientRecord, SyntheticSpec, count,
                   load_dataset, save_dataset, synth_generate)
from .dialogue import (Action, DialogueConfig, Model, SymptomState, TurnTrace,
                       apply_answer, explain, step)
from .evaluation import DiagnosisReport, EvalSummary, evaluate, report
from .inquiry import (SwitcherMLP, conditional_matrix, mutual_information_matrix,
                      mutual_information_raw, switch, symptom_scores)
from .simulator import EnvState, RewardConfig, reset, respond
from .training import Critic, TrainConfig, Transition, run_episode, td_error, train, update

__version__ = "0.1.0"
