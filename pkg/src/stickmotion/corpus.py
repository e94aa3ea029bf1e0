"""Synthetic motion corpus: typed clips, tokenizer, stats, binary store.

A clip holds an absolute root trajectory plus root-relative joints; the
54-dim frame feature is their concatenation.  Generation is reproducible
down to the byte: every clip derives its own rng from (corpus seed, index)
and serialization contains no timestamps.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import primitives
from .skeleton import NUM_JOINTS

MOTION_DIM = 3 + NUM_JOINTS * 3  # root + root-relative joints = 54
MIN_FRAMES = 40
MAX_FRAMES = 120
MAX_TEXT_TOKENS = 32
MAX_FRAME_STEP_M = 0.5

_MAGIC = b"SMCLIP\x00"
_VERSION = 1
_SPLIT_CODES = {"train": 0, "test": 1}
_SPLIT_NAMES = {v: k for k, v in _SPLIT_CODES.items()}


class UnknownTokenError(ValueError):
    pass


class InvalidMotionError(ValueError):
    pass


class ClipFormatError(ValueError):
    """Base for clip deserialization failures."""


class BadMagicError(ClipFormatError):
    pass


class VersionMismatchError(ClipFormatError):
    pass


class TruncatedClipError(ClipFormatError):
    pass


class Vocabulary:
    """Closed word list; index 0 is the padding token."""

    def __init__(self, words: tuple[str, ...] | None = None):
        self.words = tuple(words) if words is not None else primitives.build_vocabulary()
        if self.words[0] != "<pad>":
            raise ValueError("vocabulary must reserve index 0 for <pad>")
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def encode(self, text: str) -> np.ndarray:
        ids = []
        for word in primitives.tokenize_words(text):
            if word not in self._index:
                raise UnknownTokenError(f"word {word!r} not in vocabulary")
            ids.append(self._index[word])
        if len(ids) > MAX_TEXT_TOKENS:
            raise ValueError(f"text has {len(ids)} tokens, limit is {MAX_TEXT_TOKENS}")
        return np.asarray(ids, dtype=np.int32)

    def decode(self, tokens: np.ndarray) -> str:
        return " ".join(self.words[int(t)] for t in tokens if int(t) != 0)


@dataclass
class MotionClip:
    clip_id: str
    text: str
    tokens: np.ndarray      # [T] int32
    primitive: str
    params: dict
    split: str
    fps: int
    root: np.ndarray        # [L, 3] float32, absolute, starts at origin xz
    joints: np.ndarray      # [L, J, 3] float32, root-relative

    @property
    def length(self) -> int:
        return self.root.shape[0]

    def features(self) -> np.ndarray:
        return motion_to_features(self.root, self.joints)

    def absolute_joints(self) -> np.ndarray:
        return self.root[:, None, :] + self.joints


def motion_to_features(root: np.ndarray, joints: np.ndarray) -> np.ndarray:
    L = root.shape[0]
    out = np.concatenate([root, joints.reshape(L, -1)], axis=1)
    return out.astype(np.float32)


def features_to_motion(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    L = features.shape[0]
    root = features[:, :3].astype(np.float32)
    joints = features[:, 3:].reshape(L, NUM_JOINTS, 3).astype(np.float32)
    return root, joints


def validate_motion(root: np.ndarray, joints: np.ndarray, fps: int) -> None:
    L = root.shape[0]
    if not (MIN_FRAMES <= L <= MAX_FRAMES):
        raise InvalidMotionError(f"clip length {L} outside [{MIN_FRAMES}, {MAX_FRAMES}]")
    absolute = root[:, None, :] + joints
    if L > 1:
        step = np.linalg.norm(np.diff(absolute, axis=0), axis=2)
        worst = float(step.max())
        if worst > MAX_FRAME_STEP_M:
            raise InvalidMotionError(
                f"joint moved {worst:.3f} m in one frame, limit {MAX_FRAME_STEP_M}"
            )
    if not np.isfinite(root).all() or not np.isfinite(joints).all():
        raise InvalidMotionError("non-finite values in motion")


@dataclass
class FeatureStats:
    mean: np.ndarray  # [54] float64
    std: np.ndarray   # [54] float64, floored

    def normalize(self, features: np.ndarray) -> np.ndarray:
        return ((features - self.mean) / self.std).astype(np.float32)

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        return (normed * self.std + self.mean).astype(np.float32)

    @staticmethod
    def from_clips(clips: list[MotionClip]) -> "FeatureStats":
        stacked = np.concatenate([c.features() for c in clips]).astype(np.float64)
        mean = stacked.mean(axis=0)
        std = np.maximum(stacked.std(axis=0), 1e-6)
        return FeatureStats(mean, std)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "FeatureStats":
        return FeatureStats(np.asarray(d["mean"], dtype=np.float64),
                            np.asarray(d["std"], dtype=np.float64))


@dataclass
class CorpusConfig:
    n_clips: int = 1000
    seed: int = 0
    fps: int = primitives.DEFAULT_FPS
    train_frac: float = 0.9


@dataclass
class Corpus:
    config: CorpusConfig
    vocab: Vocabulary
    clips: list[MotionClip]
    stats: FeatureStats | None = field(default=None)

    def train_clips(self) -> list[MotionClip]:
        return [c for c in self.clips if c.split == "train"]

    def test_clips(self) -> list[MotionClip]:
        return [c for c in self.clips if c.split == "test"]


def build_clip(
    index: int,
    seed: int,
    fps: int,
    vocab: Vocabulary,
    primitive: str | None = None,
    params: dict | None = None,
) -> MotionClip:
    """One clip from its own rng stream; primitive/params override sampling."""
    rng = np.random.default_rng([seed, index])
    names = sorted(primitives.REGISTRY)
    name = primitive if primitive is not None else names[int(rng.integers(len(names)))]
    if params is None:
        params = primitives.sample_params(name, rng)
    params = primitives.validate_params(name, params)
    segments = primitives.build_segments(name, params, fps, rng)
    root, joints, _ = primitives.assemble(segments)
    text = primitives.render_text([seg.clause for seg in segments], rng)
    validate_motion(root, joints, fps)
    return MotionClip(
        clip_id=f"{name}_{index:05d}",
        text=text,
        tokens=vocab.encode(text),
        primitive=name,
        params=params,
        split="train",
        fps=fps,
        root=root.astype(np.float32),
        joints=joints.astype(np.float32),
    )


def generate_corpus(config: CorpusConfig) -> Corpus:
    vocab = Vocabulary()
    clips = [build_clip(i, config.seed, config.fps, vocab) for i in range(config.n_clips)]
    split_rng = np.random.default_rng([config.seed, 0x5EED])
    order = split_rng.permutation(config.n_clips)
    n_train = int(round(config.n_clips * config.train_frac))
    train_idx = set(order[:n_train].tolist())
    for i, clip in enumerate(clips):
        clip.split = "train" if i in train_idx else "test"
    corpus = Corpus(config, vocab, clips)
    corpus.stats = FeatureStats.from_clips(corpus.train_clips())
    return corpus


# ---------------------------------------------------------------------------
# binary clip format


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def clip_to_bytes(clip: MotionClip) -> bytes:
    L = clip.length
    parts = [
        _MAGIC,
        struct.pack("<HHfIB", _VERSION, NUM_JOINTS, float(clip.fps), L,
                    _SPLIT_CODES[clip.split]),
        _pack_str(clip.clip_id),
        _pack_str(clip.text),
        _pack_str(json.dumps({"primitive": clip.primitive, "params": clip.params},
                             sort_keys=True)),
        struct.pack("<H", len(clip.tokens)),
        np.asarray(clip.tokens, dtype="<i4").tobytes(),
        np.ascontiguousarray(clip.root, dtype="<f4").tobytes(),
        np.ascontiguousarray(clip.joints, dtype="<f4").tobytes(),
    ]
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedClipError(
                f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def take_str(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")


def clip_from_bytes(data: bytes) -> MotionClip:
    r = _Reader(data)
    if r.take(len(_MAGIC)) != _MAGIC:
        raise BadMagicError("not a motion clip file")
    version, joints_n, fps, L, split_code = r.unpack("<HHfIB")
    if version != _VERSION:
        raise VersionMismatchError(f"clip format v{version}, reader supports v{_VERSION}")
    if joints_n != NUM_JOINTS:
        raise ClipFormatError(f"clip has {joints_n} joints, expected {NUM_JOINTS}")
    clip_id = r.take_str()
    text = r.take_str()
    meta = json.loads(r.take_str())
    (n_tok,) = r.unpack("<H")
    tokens = np.frombuffer(r.take(4 * n_tok), dtype="<i4").astype(np.int32)
    root = np.frombuffer(r.take(4 * L * 3), dtype="<f4").reshape(L, 3).copy()
    joints = np.frombuffer(r.take(4 * L * NUM_JOINTS * 3), dtype="<f4")
    joints = joints.reshape(L, NUM_JOINTS, 3).copy()
    if r.pos != len(data):
        raise ClipFormatError(f"{len(data) - r.pos} trailing bytes after clip payload")
    return MotionClip(
        clip_id=clip_id,
        text=text,
        tokens=tokens,
        primitive=meta["primitive"],
        params=meta["params"],
        split=_SPLIT_NAMES[split_code],
        fps=int(round(fps)),
        root=root,
        joints=joints,
    )


def save_corpus(corpus: Corpus, root_dir: Path) -> dict:
    """Write clips + manifest; returns the manifest dict."""
    root_dir = Path(root_dir)
    clip_dir = root_dir / "clips"
    clip_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for clip in corpus.clips:
        blob = clip_to_bytes(clip)
        path = clip_dir / f"{clip.clip_id}.smc"
        path.write_bytes(blob)
        entries.append({
            "id": clip.clip_id,
            "file": f"clips/{clip.clip_id}.smc",
            "split": clip.split,
            "sha256": hashlib.sha256(blob).hexdigest(),
        })
    manifest = {
        "config": {
            "n_clips": corpus.config.n_clips,
            "seed": corpus.config.seed,
            "fps": corpus.config.fps,
            "train_frac": corpus.config.train_frac,
        },
        "vocab": list(corpus.vocab.words),
        "stats": corpus.stats.to_dict() if corpus.stats else None,
        "clips": entries,
    }
    (root_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n"
    )
    return manifest


def load_corpus(root_dir: Path) -> Corpus:
    root_dir = Path(root_dir)
    manifest = json.loads((root_dir / "manifest.json").read_text())
    cfg = CorpusConfig(**manifest["config"])
    vocab = Vocabulary(tuple(manifest["vocab"]))
    clips = []
    for entry in manifest["clips"]:
        blob = (root_dir / entry["file"]).read_bytes()
        if hashlib.sha256(blob).hexdigest() != entry["sha256"]:
            raise ClipFormatError(f"digest mismatch for {entry['file']}")
        clips.append(clip_from_bytes(blob))
    stats = FeatureStats.from_dict(manifest["stats"]) if manifest["stats"] else None
    return Corpus(cfg, vocab, clips, stats)
