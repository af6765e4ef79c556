from .instance import MultimodalInstance, class_counts
from .io import DatasetError, DatasetManifest, ModalitySpec, load_dataset, read_manifest, write_dataset
from .noise import inject_noise, modality_std, noise_sigma, round_sig1
from .preprocess import downsample, oversample_minority, pad_all, pre_pad, rotate_augment, rotate_y
from .synth import SynthConfig, synth_generate

__all__ = [
    "DatasetError",
    "DatasetManifest",
    "ModalitySpec",
    "MultimodalInstance",
    "SynthConfig",
    "class_counts",
    "downsample",
    "inject_noise",
    "load_dataset",
    "modality_std",
    "noise_sigma",
    "oversample_minority",
    "pad_all",
    "pre_pad",
    "read_manifest",
    "rotate_augment",
    "rotate_y",
    "round_sig1",
    "synth_generate",
    "write_dataset",
]
