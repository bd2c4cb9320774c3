"""Reliability-aware influence maximization for graph active learning.

Queries to a labeling oracle come back wrong with known probability, so this
package scores each obtained label with a quality estimate, scales a node's
influence (columns of the k-step lazy random walk P^k) by that quality, and
greedily picks batches that maximize the number of nodes receiving enough
reliable influence. Label propagation and a smoothed-feature softmax
classifier consume the same quality estimates as training weights. A small
harness runs method x noise x budget grids on synthetic block-model graphs
or on datasets loaded from plain-text files.
"""

from .graph import (DatasetError, Graph, PropagationOperator, build_graph,
                    load_dataset, load_dataset_dir, propagate, propagate_k,
                    smooth_features)
from .influence import (ActivationState, InfluenceColumn, add_source,
                        build_activation, empty_activation, influence_column,
                        influence_columns, marginal_gain, reliable_quantity)
from .reliability import (LabeledEntry, LabeledSet, SimilaritySource,
                          label_reliability, similarity, similarity_to,
                          update_quality)
from .oracle import NoisyOracle
from .models import (DivergenceError, SgcHyperparams, SoftLabelMatrix,
                     SoftmaxModel, evaluate, lp_fit_predict, sgc_fit,
                     sgc_predict, weighted_cross_entropy)
from .selection import (STRATEGIES, BatchSelection, SelectionTrace,
                        SelectorConfig, baseline_select, greedy_batch,
                        objective, run_al_loop, select_batch,
                        soft_label_entropy)
from .harness import (ActivationBreakdown, ConfigError, ExperimentConfig,
                      MethodSpec, RunResult, SbmParams, activation_breakdown,
                      generate_sbm, labeled_from_payload, run_experiment,
                      summarize, trace_payload, write_results_csv)

__version__ = "0.1.0"
