"""Dataset ingestion, calibration criteria and the QMC calibration pipeline."""

from neuroplast.calibration.criteria import (
    CriterionCache,
    criterion_g1,
    criterion_g2,
    criterion_runs,
    evaluate_criteria,
    g1_from_trajectories,
    g2_from_trajectory,
    window_mean,
)
from neuroplast.calibration.dataset import (
    AxonSample,
    CalibrationDataset,
    CellSample,
    Chronology,
    load_axon_csv,
    load_bundled,
    load_cell_csv,
    load_dataset,
)
from neuroplast.calibration.pipeline import (
    CalibrationResult,
    CalibrationStages,
    ParamCollection,
    calibrate,
    double_filter,
    evaluate_collection,
    keep_count,
)
from neuroplast.calibration.sampling import (
    GaussianSummary,
    Hypercube,
    fit_diagonal_gaussian,
    map_to_box,
    sample_truncated_gaussian_qmc,
    sobol_points,
    truncated_normal_ppf,
)

__all__ = [
    "AxonSample", "CalibrationDataset", "CalibrationResult", "CalibrationStages", "CellSample",
    "Chronology", "CriterionCache", "GaussianSummary", "Hypercube", "ParamCollection", "calibrate",
    "criterion_g1", "criterion_g2", "criterion_runs", "double_filter", "evaluate_collection",
    "evaluate_criteria", "fit_diagonal_gaussian", "g1_from_trajectories", "g2_from_trajectory",
    "keep_count", "load_axon_csv", "load_bundled", "load_cell_csv", "load_dataset", "map_to_box",
    "sample_truncated_gaussian_qmc", "sobol_points", "truncated_normal_ppf", "window_mean",
]
