"""Benchmark harness for people search over privacy-preserving coauthor networks."""
from ._accel import BACKEND
from .evaluation import (QueryTask, WeightGrid, average_precision, best_weight_ap, load_tasks, mae,
                         map_metric, wilcoxon_signed_rank)
from .features import (AuthorityMap, ScoredCandidate, WeightVector, content_score, local_similarity,
                       pagerank, rank_candidates)
from .graph_store import Corpus, Network, load_edges, load_publications
from .privacy_sim import (PrivacyConfig, PrivacyView, apply_candidate_privacy, mask_user_connections,
                          privacy_weights, sample_private_set)
from .synthgen import SynthSpec, ba_graph, synth_tasks

__version__ = "0.1.0"
