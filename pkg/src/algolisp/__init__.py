"""Toolkit for the AlgoLisp program-synthesis ecosystem.

Covers the full loop around a synthesis model: parsing and evaluating DSL
programs, judging predictions by functional equivalence, loading and
filtering corpora, generating adversarial description perturbations,
measuring perturbation distances, augmenting training data, and a numerics
reference for gated cross-attention.
"""

from __future__ import annotations

from .dsl import (
    ArityMismatch,
    CollisionError,
    DslError,
    ProgramAst,
    UnbalancedParens,
    UnknownToken,
    VarMap,
    code_length,
    identifiers,
    parse_program,
    rename_identifiers,
    serialize,
    tree_depth,
)
from .interp import (
    DepthLimitExceeded,
    DivisionByZero,
    DslTypeError,
    EmptyListError,
    EvalError,
    IoPair,
    Limits,
    OpRegistry,
    OpSpec,
    StepLimitExceeded,
    TestResult,
    UnboundIdentifier,
    deep_equal,
    default_registry,
    eval_program,
    run_tests,
)
from .judge import (
    EmptyTestSuite,
    EvalReport,
    InstanceVerdict,
    is_adversarial_failure,
    is_solution,
    score_predictions,
)

__version__ = "0.1.0"

from .attacks import (  # noqa: E402
    AdversarialInstance,
    AttackClass,
    AttackError,
    Category,
    build_suite,
    gen_rr,
    gen_sr,
    gen_vc,
    gen_vi,
    gen_voc,
    write_suite,
)
from .attnkernel import (  # noqa: E402
    GateParams,
    attention_weights,
    cross_attention,
    gated_cross_attention,
    grad_check,
    scaled_dot_attention,
    self_attention,
)
from .augment import (  # noqa: E402
    AugmentConfig,
    AugmentError,
    EditOp,
    PipelineResult,
    Providers,
    attention_replace,
    back_translate,
    basic_edit,
    offline_providers,
    run_pipeline,
)
from .corpus import (  # noqa: E402
    CorpusError,
    DatasetStats,
    ProblemInstance,
    filter_valid,
    load,
    make_instance,
    stats,
    write,
)
from .metrics import (  # noqa: E402
    DistanceReport,
    confusion_pct,
    embedding_distance,
    lev_ratio,
    mean_distances,
    measure,
    token_levenshtein,
)
from .providers import ProviderUnavailable  # noqa: E402
from .wordlists import protected_tokens, stopwords, synonyms  # noqa: E402
