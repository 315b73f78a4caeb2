from .synth import process_synth_job
from .fit_planes import process_fit_planes_job
from .relocalize import process_relocalize_job
from .evaluate import process_evaluate_job

__all__ = [
    "process_synth_job",
    "process_fit_planes_job",
    "process_relocalize_job",
    "process_evaluate_job",
]
