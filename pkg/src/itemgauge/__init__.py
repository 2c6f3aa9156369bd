"""itemgauge: estimate assessment-item difficulty from item features.

Items are coded on fifteen learner-independent variables; a proportional-odds
model maps the codes to probabilities of three ordered difficulty levels.
"""

from .assoc import (
    CorrelationEntry,
    CorrelationMatrix,
    bvn_cdf,
    chi_sq_sf,
    correlation_matrix,
    pearson,
    polychoric,
    polychoric_from_table,
    polyserial,
    std_normal_cdf,
)
from .errors import DataError, ItemGaugeError, NumericalError
from .evaluation import (
    ConfusionMatrix,
    accuracy,
    confusion,
    confusion_by_course,
    split,
)
from .items import (
    DEFAULT_MARGINALS,
    Dataset,
    DescriptiveReport,
    DifficultyLevel,
    ItemCoding,
    LEVEL_NAMES,
    VARIABLE_NAMES,
    VARIABLES,
    VariableSpec,
    describe,
    encode_design,
    example_item,
    generate_synthetic,
    parse_dataset,
    serialize_dataset,
    validate_coding,
    variable_spec,
)
from .polr import (
    FittedModel,
    ModelCriteria,
    PredictedProbabilities,
    WaldRow,
    classify,
    classify_probs,
    coefficient_table,
    criteria,
    deserialize_model,
    fit,
    information_criteria,
    log_likelihood,
    predict_from_codes,
    predict_probs,
    reference_model,
    serialize_model,
)
from .selection import (
    LrTestResult,
    SelectionTrace,
    SubsetScore,
    VifReport,
    VifRow,
    evaluate_subsets,
    lr_test,
    stepwise_select,
    vif,
)

__version__ = "0.1.0"

__all__ = [
    "CorrelationEntry",
    "CorrelationMatrix",
    "ConfusionMatrix",
    "DataError",
    "Dataset",
    "DescriptiveReport",
    "DifficultyLevel",
    "DEFAULT_MARGINALS",
    "FittedModel",
    "ItemCoding",
    "ItemGaugeError",
    "LEVEL_NAMES",
    "LrTestResult",
    "ModelCriteria",
    "NumericalError",
    "PredictedProbabilities",
    "SelectionTrace",
    "SubsetScore",
    "VARIABLES",
    "VARIABLE_NAMES",
    "VariableSpec",
    "VifReport",
    "VifRow",
    "WaldRow",
    "accuracy",
    "bvn_cdf",
    "chi_sq_sf",
    "classify",
    "classify_probs",
    "coefficient_table",
    "confusion",
    "confusion_by_course",
    "correlation_matrix",
    "criteria",
    "describe",
    "deserialize_model",
    "encode_design",
    "evaluate_subsets",
    "example_item",
    "fit",
    "generate_synthetic",
    "information_criteria",
    "log_likelihood",
    "lr_test",
    "parse_dataset",
    "pearson",
    "polychoric",
    "polychoric_from_table",
    "polyserial",
    "predict_from_codes",
    "predict_probs",
    "reference_model",
    "serialize_dataset",
    "serialize_model",
    "split",
    "std_normal_cdf",
    "stepwise_select",
    "validate_coding",
    "variable_spec",
    "vif",
]
