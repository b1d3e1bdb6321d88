"""Classical and quantum LogAD models."""
from .accounting import ParamReport, count_parameters, format_size
from .checkpoint import load_model, save_model
from .detectors import (
    DeepLog,
    LogAnomaly,
    LogRobust,
    ModelConfig,
    build_model,
    deeplog_detect,
    loganomaly_detect,
    logrobust_classify,
    next_event_forward,
)
from .layers import Affine, Embedding, LSTMLayer, QLayer, SelfAttention, q_attention, qlstm_cell
