"""Reading annotation and prediction documents, writing reports and matrix files."""

from .loaders import (
    Dataset,
    DatasetFiles,
    GroundTruthSet,
    ImageAnnotations,
    ImageInfo,
    ImagePredictions,
    LoadReport,
    PredictionSet,
    Rejection,
    build_scenes,
    load_dataset,
    load_ground_truth,
    load_predictions,
    read_json,
    write_ground_truth,
    write_predictions,
)
from .matrices import load_matrices, require_matrix, save_matrices
from .reports import (
    GT_COLUMNS,
    PREDICTION_COLUMNS,
    REJECTION_COLUMNS,
    ReportFormat,
    Table,
    assignment_tables,
    render_report,
    sibling_path,
    write_report,
)

__all__ = [
    # Loading
    "DatasetFiles",
    "Dataset",
    "GroundTruthSet",
    "PredictionSet",
    "ImageInfo",
    "ImageAnnotations",
    "ImagePredictions",
    "LoadReport",
    "Rejection",
    "read_json",
    "load_ground_truth",
    "load_predictions",
    "build_scenes",
    "load_dataset",
    "write_ground_truth",
    "write_predictions",
    # Reports
    "ReportFormat",
    "Table",
    "PREDICTION_COLUMNS",
    "GT_COLUMNS",
    "REJECTION_COLUMNS",
    "render_report",
    "write_report",
    "sibling_path",
    "assignment_tables",
    # Matrix files
    "save_matrices",
    "load_matrices",
    "require_matrix",
]
