"""Synthetic two-stream dataset shaped like a motion-capture + EMG exercise corpus.

Data are clearly synthetic. Each instance is split into time segments; in
every segment one modality (the *carrier*) shows the class pattern at full
amplitude while the other shows the pattern of a fixed wrong class (the
*decoy*) at reduced amplitude. Each segment draws a random sign, so
summing a modality linearly over time cancels out. The class can only be read
per timestep, by comparing the two modalities, which is the kind of
cross-modality selection attention performs.

Positional modality: 26 joints × (x, y, z). The class pattern moves joints
along y only, so rotation about the vertical axis keeps it intact.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .instance import MultimodalInstance
from .io import DatasetManifest, ModalitySpec


@dataclass
class SynthConfig:
    subjects: int = 22
    instances_per_subject: int = 9
    classes: int = 3
    min_length: int = 90  # raw frames at ``sampling_rate``
    max_length: int = 180
    dims: tuple[int, int] = (78, 4)
    sampling_rate: float = 60.0
    segments: int = 4
    seed: int = 0
    carrier_amplitude: float = 1.0
    decoy_ratio: float = 0.5
    mc_noise: float = 0.05
    emg_noise: float = 0.05
    mc_scale: float = 1.0
    emg_scale: float = 1.0
    subject_jitter: float = 0.3
    class_weights: tuple[float, ...] = ()  # empty: balanced
    names: tuple[str, str] = ("MC", "EMG")
    class_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 2 or min(self.dims) <= 0:
            raise ValueError(f"need two positive modality dims, got {self.dims}")
        if self.dims[0] % 3:
            raise ValueError(f"positional modality dim {self.dims[0]} must be a multiple of 3")
        if self.classes < 2:
            raise ValueError("need at least two classes")
        if not 0 < self.min_length <= self.max_length:
            raise ValueError("invalid length range")
        if self.segments < 1 or self.min_length < self.segments:
            raise ValueError("each segment needs at least one frame")
        if self.subjects < 1 or self.instances_per_subject < 1:
            raise ValueError("need at least one subject and one instance per subject")
        if self.class_weights and len(self.class_weights) != self.classes:
            raise ValueError("class_weights must have one entry per class")
        self.class_weights = tuple(float(w) for w in self.class_weights)
        self.names = tuple(self.names)
        self.class_names = tuple(self.class_names)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class _World:
    mc_patterns: np.ndarray  # (classes, joints) y-displacement per joint
    emg_patterns: np.ndarray  # (classes, channels)
    skeleton: np.ndarray  # (joints, 3) neutral pose
    sway: np.ndarray = field(default=None)


def _unit_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def _world(cfg: SynthConfig, rng: np.random.Generator) -> _World:
    joints = cfg.dims[0] // 3
    chans = cfg.dims[1]
    mc = _unit_rows(rng.normal(size=(cfg.classes, joints))) * np.sqrt(joints)
    emg = _unit_rows(rng.normal(size=(cfg.classes, chans))) * np.sqrt(chans)
    skeleton = np.stack(
        [rng.uniform(-0.3, 0.3, joints), np.linspace(0.0, 1.7, joints), rng.uniform(-0.2, 0.2, joints)],
        axis=1,
    )
    sway = rng.normal(size=(joints, 3)) * 0.05
    return _World(mc, emg, skeleton, sway)


def _instance(cfg, world, rng, subject_offset, emg_gain, label, iid, sid):
    joints = cfg.dims[0] // 3
    T = int(rng.integers(cfg.min_length, cfg.max_length + 1))
    t = np.arange(T) / cfg.sampling_rate
    decoy = int((label + rng.integers(1, cfg.classes)) % cfg.classes)

    pose = world.skeleton + subject_offset
    phase = rng.uniform(0, 2 * np.pi)
    motion = np.sin(2 * np.pi * 0.3 * t + phase)[:, None, None] * world.sway[None]
    mc = np.broadcast_to(pose, (T, joints, 3)) + motion
    mc = mc + rng.normal(scale=cfg.mc_noise, size=mc.shape)
    emg = rng.normal(scale=cfg.emg_noise, size=(T, cfg.dims[1]))

    bounds = np.linspace(0, T, cfg.segments + 1).round().astype(int)
    carriers = []
    amp = cfg.carrier_amplitude
    for s in range(cfg.segments):
        lo, hi = bounds[s], bounds[s + 1]
        carrier = int(rng.integers(0, 2))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        strong, weak = label, decoy
        a_mc = (amp if carrier == 0 else amp * cfg.decoy_ratio) * sign
        a_emg = (amp if carrier == 1 else amp * cfg.decoy_ratio) * sign
        c_mc = strong if carrier == 0 else weak
        c_emg = strong if carrier == 1 else weak
        mc[lo:hi, :, 1] += 0.1 * a_mc * world.mc_patterns[c_mc]
        emg[lo:hi] += a_emg * world.emg_patterns[c_emg] * emg_gain
        carriers.append(carrier)

    mc = mc.reshape(T, -1) * cfg.mc_scale
    emg = emg * cfg.emg_scale
    meta = {"carriers": carriers, "decoy": decoy, "segment_bounds": bounds.tolist()}
    return MultimodalInstance(iid, sid, label, [mc, emg], meta=meta)


def synth_generate(cfg: SynthConfig) -> tuple[DatasetManifest, list[MultimodalInstance]]:
    """Generate the dataset in memory; identical config gives identical arrays."""
    rng = np.random.default_rng(cfg.seed)
    world = _world(cfg, rng)
    weights = np.array(cfg.class_weights or [1.0] * cfg.classes)
    weights = weights / weights.sum()
    joints = cfg.dims[0] // 3
    instances = []
    width = len(str(cfg.subjects * cfg.instances_per_subject))
    n = 0
    for s in range(cfg.subjects):
        sid = f"S{s + 1:02d}"
        offset = rng.normal(scale=cfg.subject_jitter * 0.1, size=(joints, 3))
        gain = 1.0 + rng.uniform(-cfg.subject_jitter, cfg.subject_jitter, size=cfg.dims[1])
        for _ in range(cfg.instances_per_subject):
            if cfg.class_weights:
                label = int(rng.choice(cfg.classes, p=weights))
            else:
                label = n % cfg.classes
            iid = f"I{n:0{width}d}"
            instances.append(_instance(cfg, world, rng, offset, gain, label, iid, sid))
            n += 1
    class_names = list(cfg.class_names) or [f"class{c}" for c in range(cfg.classes)]
    manifest = DatasetManifest(
        name=f"synthetic-seed{cfg.seed}",
        modalities=[
            ModalitySpec(cfg.names[0], cfg.dims[0], cfg.sampling_rate, True),
            ModalitySpec(cfg.names[1], cfg.dims[1], cfg.sampling_rate, False),
        ],
        classes=class_names,
        label_scheme="synthetic",
    )
    return manifest, instances
