from .experiment import CSV_COLUMNS, ExperimentConfig, RunRecord
