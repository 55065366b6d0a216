"""Model-based clustering of right-censored survival data.

A finite mixture of Kaplan-Meier experts whose mixing proportions come from a
multinomial logistic regression on the features, trained by hard-assignment EM.
"""

from .baselines import KMeansSurvivalModel, kmeans_fit, kmeans_survival_fit, kmeans_survival_predict
from .classifier import SoftmaxGate, fit_gate
from .data import (
    ColumnSchema,
    PreprocessRecipe,
    SurvivalDataset,
    apply_preprocess,
    fit_preprocess,
    load_csv,
    stratified_split,
)
from .kernels import BACKEND
from .metrics import CurvePredictions, LogrankResult, logrank_test, td_c_index
from .mixture import (
    FitConfig,
    Responsibilities,
    SurvMixModel,
    cluster_uncertainty,
    e_step,
    fit,
    observed_log_likelihood,
    predict_cluster,
    predict_survival,
    responsibilities,
    select_k,
)
from .nonparam import StepSurvivalFunction, kaplan_meier, plugin_bandwidth, smoothed_density
from .synth import SynthSpec, generate

__version__ = "0.1.0"
