# Инициализационный файл для модуля experiments
from .run_config import (
    RunConfig,
    load_run_config,
    COMMANDS,
    STOCHASTIC,
    METRIC_CHECKS,
    FORMATS
)
from .report import (
    Report,
    Table,
    CheckLine,
    emit_report,
    render_text,
    format_value,
    VERSION
)
from .runner import (
    run_command,
    parse_point,
    parse_lambda_path,
    COMMAND_HANDLERS
)
