"""Log ingestion: parsing, windowing, splitting and vectorisation."""
from .drain import DrainParser, LogTemplate, drain_parse
from .reader import RawLogLine, read_parsed_csv, read_raw_log, write_parsed_csv, write_templates
from .vectorize import PAD, EventVector, Vocabulary, history_pairs, vectorize
from .windows import (
    WindowedSample,
    chronological_split,
    filter_normal,
    oversample_anomalies,
    subsample_training,
    windowize,
)
