"""Media primitives: RGB frame buffers, mono audio clips, and file IO.

Video lives in a purpose-built single-file container (``.svf``) so that
identical inputs always produce identical bytes: a fixed struct header,
a per-frame size table, then one zlib-compressed raw RGB blob per frame.
mp4/avi writers embed timestamps or vary across codec builds, which breaks
the byte-determinism this pipeline is tested against.

Layout of an ``.svf`` file::

    magic      4s      b"SVF1"
    frames     uint32
    height     uint32
    width      uint32
    channels   uint32  (always 3, RGB)
    fps_num    uint32
    fps_den    uint32
    sizes      frames * uint64   compressed byte-length per frame
    blobs      concatenated zlib streams, each inflating to H*W*C bytes

Audio is plain 16-bit PCM WAV (stdlib ``wave``), mono, canonical rate
44_100 Hz; in memory clips are float32 in [-1, 1].

Sidecar files (labels, face track, skeleton track, utterance) are UTF-8
newline-delimited bodies prefixed with a ``#sha256=<hex>`` header line
covering the body bytes.
"""

from __future__ import annotations

import hashlib
import struct
import wave
import zlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ChecksumError, MediaError

_MAGIC = b"SVF1"
_HEADER = struct.Struct("<4sIIIIII")
_ZLIB_LEVEL = 6

AUDIO_RATE = 44_100


@dataclass(frozen=True)
class Frame:
    """One RGB frame plus (optional) provenance back to its source video."""

    data: np.ndarray  # uint8, shape (H, W, 3)
    video_id: str | None = None
    frame_index: int | None = None

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[2] != 3 or self.data.dtype != np.uint8:
            raise MediaError(f"frame must be uint8 (H, W, 3), got {self.data.dtype} {self.data.shape}")

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM audio, float32 in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = AUDIO_RATE
    video_id: str | None = None

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise MediaError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.ndim != 1:
            raise MediaError("audio clip must be mono (1-D samples)")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def write_video(path: str | Path, frames: np.ndarray, fps: float) -> None:
    """Write a (T, H, W, 3) uint8 array as an ``.svf`` file."""
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise MediaError(f"expected uint8 (T, H, W, 3), got {frames.dtype} {frames.shape}")
    t, h, w, c = frames.shape
    rate = Fraction(fps).limit_denominator(1_000_000)
    blobs = [zlib.compress(frames[i].tobytes(), _ZLIB_LEVEL) for i in range(t)]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, t, h, w, c, rate.numerator, rate.denominator))
        fh.write(struct.pack(f"<{t}Q", *(len(b) for b in blobs)))
        for blob in blobs:
            fh.write(blob)


class VideoReader:
    """Random-access reader for ``.svf`` files."""

    def __init__(self, path: str | Path, video_id: str | None = None):
        self.path = Path(path)
        self.video_id = video_id
        try:
            raw = self.path.read_bytes()
        except OSError as exc:
            raise MediaError(f"cannot read video {path}: {exc}") from exc
        if len(raw) < _HEADER.size:
            raise MediaError(f"truncated video file {path}")
        magic, t, h, w, c, num, den = _HEADER.unpack_from(raw, 0)
        if magic != _MAGIC:
            raise MediaError(f"{path} is not an SVF video (bad magic)")
        if c != 3 or den == 0:
            raise MediaError(f"{path} has unsupported header values")
        self.frame_count, self.height, self.width = int(t), int(h), int(w)
        self.fps = num / den
        sizes = struct.unpack_from(f"<{t}Q", raw, _HEADER.size)
        offsets = np.cumsum([_HEADER.size + 8 * t, *sizes])
        self._raw = raw
        self._spans = [(int(offsets[i]), int(sizes[i])) for i in range(t)]

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps

    def read_frame(self, index: int) -> Frame:
        if not 0 <= index < self.frame_count:
            raise MediaError(f"frame index {index} out of range [0, {self.frame_count})")
        off, size = self._spans[index]
        data = np.frombuffer(zlib.decompress(self._raw[off : off + size]), dtype=np.uint8)
        data = data.reshape(self.height, self.width, 3)
        return Frame(data=data, video_id=self.video_id, frame_index=index)

    def read_frames(self, indices) -> list[Frame]:
        return [self.read_frame(i) for i in indices]


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = AUDIO_RATE) -> None:
    """Write float32 [-1, 1] samples as mono 16-bit PCM."""
    pcm = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (pcm * 32767.0).round().astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(pcm.tobytes())


def read_wav(path: str | Path, video_id: str | None = None) -> AudioClip:
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
                raise MediaError(f"{path}: expected mono 16-bit PCM")
            rate = fh.getframerate()
            pcm = np.frombuffer(fh.readframes(fh.getnframes()), dtype="<i2")
    except (wave.Error, OSError) as exc:
        raise MediaError(f"cannot read wav {path}: {exc}") from exc
    return AudioClip(samples=pcm.astype(np.float32) / 32767.0, sample_rate=rate, video_id=video_id)


# -- checksummed sidecars ----------------------------------------------------

_CHECKSUM_PREFIX = "#sha256="


def write_sidecar(path: str | Path, lines: list[str]) -> None:
    """Write newline-delimited ``lines`` behind a sha256 header over the body."""
    body = "".join(f"{line}\n" for line in lines).encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    with open(path, "wb") as fh:
        fh.write(f"{_CHECKSUM_PREFIX}{digest}\n".encode("ascii"))
        fh.write(body)


def read_sidecar(path: str | Path) -> list[str]:
    """Read a checksummed sidecar, raising ChecksumError on tampering."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise MediaError(f"cannot read sidecar {path}: {exc}") from exc
    head, sep, body = raw.partition(b"\n")
    header = head.decode("utf-8", errors="replace")
    if not sep or not header.startswith(_CHECKSUM_PREFIX):
        raise MediaError(f"{path}: missing checksum header")
    expected = header[len(_CHECKSUM_PREFIX) :].strip()
    actual = hashlib.sha256(body).hexdigest()
    if actual != expected:
        raise ChecksumError(f"{path}: checksum mismatch (expected {expected}, got {actual})")
    text = body.decode("utf-8")
    return [line for line in text.split("\n") if line != ""]
