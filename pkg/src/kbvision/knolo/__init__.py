"""Knowledge-network learning and optimisation: GA tuning of KB parameters."""
from .distributor import Distributor, JobResult, distribute
from .encoding import Chromosome, decode, decode_gene, encode_nearest, read_chromosome, write_chromosome
from .fitness import (
    CONFUSION_METRICS,
    MetricTerm,
    combine_fitness,
    fitness_confusion,
    fitness_dice,
    fitness_distance,
)
from .ga import Evaluation, FitnessReport, GAConfig, best_report, breed, ga_run
from .report import history_csv, history_html, knolo_report, parse_history_csv, read_history_csv
from .tuning import (
    ThinkJob,
    TuningCase,
    check_tuning_setup,
    make_job,
    parse_ga_config,
    read_ga_config,
    read_tuning_manifest,
)

__all__ = [
    "CONFUSION_METRICS", "Chromosome", "Distributor", "Evaluation", "FitnessReport", "GAConfig",
    "JobResult", "MetricTerm", "ThinkJob", "TuningCase", "best_report", "breed",
    "check_tuning_setup", "combine_fitness", "decode", "decode_gene", "distribute",
    "encode_nearest", "fitness_confusion", "fitness_dice", "fitness_distance", "ga_run",
    "history_csv", "history_html", "knolo_report", "make_job", "parse_ga_config",
    "parse_history_csv", "read_chromosome", "read_ga_config", "read_history_csv",
    "read_tuning_manifest", "write_chromosome",
]
