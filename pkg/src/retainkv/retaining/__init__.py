from retainkv.retaining.dataset import load_dataset, make_locretq_example, save_dataset, truncate_example
from retainkv.retaining.labels import cis_labels, head_inputs, labels_from_forward
from retainkv.retaining.objective import grad_head, loss, loss_and_grad, predict_cis, predict_layer
from retainkv.retaining.optim import AdamWState, adamw_step, lr_schedule
from retainkv.retaining.retaining_models import (
    HeadSet,
    RetainingHead,
    ScoreTensor,
    TrainingConfig,
    TrainingExample,
    head_input_width,
    init_headset,
    load_headset,
    save_headset,
)
from retainkv.retaining.trainer import LossPoint, TrainingResult, train

__all__ = [
    "AdamWState",
    "HeadSet",
    "LossPoint",
    "RetainingHead",
    "ScoreTensor",
    "TrainingConfig",
    "TrainingExample",
    "TrainingResult",
    "adamw_step",
    "cis_labels",
    "grad_head",
    "head_input_width",
    "head_inputs",
    "init_headset",
    "labels_from_forward",
    "load_dataset",
    "load_headset",
    "loss",
    "loss_and_grad",
    "lr_schedule",
    "make_locretq_example",
    "predict_cis",
    "predict_layer",
    "save_dataset",
    "save_headset",
    "train",
    "truncate_example",
]
