from retainkv.harness.ablation import ABLATION_COLUMNS, AblationReport, AblationRow, stabilizer_ablation
from retainkv.harness.compression import compression_ratio
from retainkv.harness.consistency import CONSISTENCY_COLUMNS, ConsistencyReport, Scorer, consistency_curve, scorer_for
from retainkv.harness.evaluation import (
    ACCURACY_COLUMNS,
    CONTROL_HEADS,
    FULL_ATTENTION,
    AccuracyRow,
    AccuracyTable,
    passkey_eval,
)
from retainkv.harness.parallel import run_trials
from retainkv.harness.passkey import PasskeyExample, PasskeyTaskConfig, PasskeyVocab, gen_passkey, gen_passkey_set
from retainkv.harness.reports import (
    SYNTHETIC_NOTE,
    read_csv_report,
    report_header,
    write_csv_report,
    write_json_report,
)
from retainkv.harness.retained_trace import matrix_rows, trace_retained

__all__ = [
    "ABLATION_COLUMNS",
    "ACCURACY_COLUMNS",
    "CONSISTENCY_COLUMNS",
    "CONTROL_HEADS",
    "FULL_ATTENTION",
    "SYNTHETIC_NOTE",
    "AblationReport",
    "AblationRow",
    "AccuracyRow",
    "AccuracyTable",
    "ConsistencyReport",
    "PasskeyExample",
    "PasskeyTaskConfig",
    "PasskeyVocab",
    "Scorer",
    "compression_ratio",
    "consistency_curve",
    "gen_passkey",
    "gen_passkey_set",
    "matrix_rows",
    "passkey_eval",
    "read_csv_report",
    "report_header",
    "run_trials",
    "scorer_for",
    "stabilizer_ablation",
    "trace_retained",
    "write_csv_report",
    "write_json_report",
]
