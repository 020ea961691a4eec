"""Cardinality estimation for LIKE predicates with a worst-case Q-error bound.

The library answers prefix (S%), suffix (%S) and substring (%S%)
cardinality queries over a fixed set of byte strings.  Estimates for
correctly classified patterns are off by at most a configurable factor
eb, empty-answer queries are routed to the smallest bucket with a
tunable probability, and models serialize to a compact checksummed
file.  See the README for the CLI and the model format.
"""

from .core import (
    Bucket,
    BucketScheme,
    Config,
    PatternKind,
    Query,
    covers,
    make_buckets,
    q_error,
    scheme_with_count,
)
from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    DatasetError,
    GenerationError,
    InfeasibleError,
    LikecardError,
    LongQueryError,
    ModelFormatError,
    TrieBucketRangeError,
    TrieError,
    TrieSizeError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from .estimator import (
    EstimatorModel,
    build,
    classify_query,
    classify_with_prefix_walk,
    estimate,
    estimate_many,
    load_model,
    markov_estimate,
    markov_product,
    save_model,
)
from .groundtruth import (
    Corpus,
    PatternCatalog,
    Workload,
    enumerate_patterns,
    exact_cardinality,
    gen_workload,
    read_dataset,
    read_workload,
    write_dataset,
    write_workload,
)

__version__ = "0.1.0"

__all__ = [
    "Bucket",
    "BucketScheme",
    "Config",
    "Corpus",
    "EstimatorModel",
    "PatternCatalog",
    "PatternKind",
    "Query",
    "Workload",
    "build",
    "classify_query",
    "classify_with_prefix_walk",
    "covers",
    "enumerate_patterns",
    "estimate",
    "estimate_many",
    "exact_cardinality",
    "gen_workload",
    "load_model",
    "make_buckets",
    "markov_estimate",
    "markov_product",
    "q_error",
    "read_dataset",
    "read_workload",
    "save_model",
    "scheme_with_count",
    "write_dataset",
    "write_workload",
    "LikecardError",
    "ConfigError",
    "DatasetError",
    "GenerationError",
    "InfeasibleError",
    "LongQueryError",
    "TrieError",
    "TrieBucketRangeError",
    "TrieSizeError",
    "ModelFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedModelError",
    "ChecksumError",
]
