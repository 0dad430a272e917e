"""Pluggable clients for the five external model roles, plus mocks.

Roles: ``vlm`` (vision-language), ``alm`` (audio-language), ``face``
(face detection), ``pose`` (pose estimation), ``denoise`` / ``asr``
(speech enhancement / recognition). Remote backends all speak one
generic HTTP contract (JSON in, JSON out — documented in the README);
mock backends answer from fixture sidecars and are selected with
backend ids of the form ``mock:<role>``.

With temperature 0 and mocks, every decision is a pure function of
(planted label, noise seed, segment id), which is what makes the whole
pipeline bit-reproducible.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
import urllib.error
import urllib.request
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .enhance import BoundingBox, Skeleton
from .errors import BackendError, ConfigError, ProtocolError, TransientBackendError
from .media import AudioClip, Frame
from .sidecars import SidecarIndex

ROLES = ("vlm", "alm", "face", "pose", "denoise", "asr")

DEFAULT_MAX_INFLIGHT = 4
DEFAULT_MAX_ATTEMPTS = 2
DEFAULT_BACKOFF_S = 0.5


@dataclass(frozen=True)
class VisionRequest:
    frames: tuple[Frame, ...]
    prompt: str
    max_response_tokens: int = 256
    temperature: float = 0.0
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.frames:
            raise ProtocolError("vision request needs at least one frame")
        if not self.prompt.strip():
            raise ProtocolError("vision request needs a non-empty prompt")
        if self.temperature < 0:
            raise ProtocolError("temperature must be >= 0")


@dataclass(frozen=True)
class AudioRequest:
    clip: AudioClip
    prompt: str
    transcript: str | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.prompt.strip():
            raise ProtocolError("audio request needs a non-empty prompt")
        if self.transcript is not None and "secondary evidence" not in self.prompt.lower():
            raise ProtocolError("prompt must mark an attached transcript as secondary evidence")


@dataclass(frozen=True)
class BackendResponse:
    text: str
    latency_ms: int
    backend_id: str
    attempt: int

    def __post_init__(self) -> None:
        if self.attempt < 1:
            raise ProtocolError("attempt counter starts at 1")


class Backend:
    """Common plumbing: identity, call counter, in-flight limit."""

    def __init__(self, backend_id: str, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        self.backend_id = backend_id
        self.calls = 0
        self.semaphore = threading.BoundedSemaphore(max_inflight)

    def _count(self) -> None:
        self.calls += 1


def _with_retries(fn: Callable[[], str], backend_id: str,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                  backoff_s: float = DEFAULT_BACKOFF_S,
                  sleep: Callable[[float], None] = time.sleep) -> tuple[str, int]:
    """Run fn with exponential backoff on transient failures.

    Delays are backoff_s * 2**(attempt-1), monotone non-decreasing.
    """
    if max_attempts < 1:
        raise ConfigError("max_attempts must be >= 1")
    last: Exception | None = None
    for attempt in range(1, max_attempts + 1):
        try:
            return fn(), attempt
        except TransientBackendError as exc:
            last = exc
            if attempt < max_attempts:
                sleep(backoff_s * 2 ** (attempt - 1))
    raise BackendError(f"{backend_id}: exhausted {max_attempts} attempts: {last}") from last


def vlm_infer(request: VisionRequest, backend, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
              backoff_s: float = DEFAULT_BACKOFF_S,
              sleep: Callable[[float], None] = time.sleep) -> BackendResponse:
    t0 = time.monotonic()
    text, attempt = _with_retries(lambda: backend.generate(request), backend.backend_id,
                                  max_attempts, backoff_s, sleep)
    if not isinstance(text, str) or not text.strip():
        raise ProtocolError(f"{backend.backend_id}: empty or non-text reply")
    latency = 0 if getattr(backend, "fixed_latency", False) else int((time.monotonic() - t0) * 1000)
    return BackendResponse(text=text, latency_ms=latency, backend_id=backend.backend_id, attempt=attempt)


def alm_infer(request: AudioRequest, backend, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
              backoff_s: float = DEFAULT_BACKOFF_S,
              sleep: Callable[[float], None] = time.sleep) -> BackendResponse:
    t0 = time.monotonic()
    text, attempt = _with_retries(lambda: backend.generate(request), backend.backend_id,
                                  max_attempts, backoff_s, sleep)
    if not isinstance(text, str) or not text.strip():
        raise ProtocolError(f"{backend.backend_id}: empty or non-text reply")
    latency = 0 if getattr(backend, "fixed_latency", False) else int((time.monotonic() - t0) * 1000)
    return BackendResponse(text=text, latency_ms=latency, backend_id=backend.backend_id, attempt=attempt)


def detect_faces(frame: Frame, backend) -> BoundingBox | None:
    """Highest-confidence face box in the frame, or None."""
    try:
        return backend.detect(frame)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{backend.backend_id}: face detection failed: {exc}") from exc


def estimate_pose(frame: Frame, backend) -> Skeleton:
    try:
        return backend.estimate(frame)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"{backend.backend_id}: pose estimation failed: {exc}") from exc


# -- generic HTTP adapters ---------------------------------------------------

class HttpBackendBase(Backend):
    """One JSON-over-HTTP contract for every remote role.

    POST <base_url>/<route> with an auth bearer token; the reply must be
    a JSON object. Timeouts, connection errors, and 5xx are transient;
    anything unparseable is a protocol error.
    """

    def __init__(self, backend_id: str, base_url: str, route: str, token: str = "",
                 timeout_s: float = 30.0, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, max_inflight)
        self.url = base_url.rstrip("/") + "/" + route.lstrip("/")
        self.token = token
        self.timeout_s = timeout_s

    def _post(self, payload: dict) -> dict:
        self._count()
        body = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, method="POST")
        req.add_header("Content-Type", "application/json")
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code >= 500:
                raise TransientBackendError(f"{self.backend_id}: HTTP {exc.code}") from exc
            raise BackendError(f"{self.backend_id}: HTTP {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransientBackendError(f"{self.backend_id}: {exc}") from exc
        if not raw:
            raise ProtocolError(f"{self.backend_id}: empty response body")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"{self.backend_id}: non-JSON reply") from exc
        if not isinstance(doc, dict):
            raise ProtocolError(f"{self.backend_id}: reply is not a JSON object")
        return doc


def _encode_frame(frame: Frame) -> dict:
    return {"width": frame.width, "height": frame.height,
            "rgb_b64": base64.b64encode(frame.data.tobytes()).decode("ascii")}


def _encode_clip(clip: AudioClip) -> dict:
    pcm = (np.clip(clip.samples, -1.0, 1.0) * 32767.0).round().astype("<i2")
    return {"sample_rate": clip.sample_rate,
            "pcm16_b64": base64.b64encode(pcm.tobytes()).decode("ascii")}


class HttpVisionBackend(HttpBackendBase):
    """Generic VLM endpoint. Subsamples evenly past max_frames and logs it."""

    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 max_frames: int | None = None, backend_id: str = "http:vlm",
                 max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/vision", token, timeout_s, max_inflight)
        self.max_frames = max_frames
        self.subsampled_requests = 0

    def generate(self, request: VisionRequest) -> str:
        frames = list(request.frames)
        if self.max_frames is not None and len(frames) > self.max_frames:
            idx = np.linspace(0, len(frames) - 1, self.max_frames).round().astype(int)
            frames = [frames[i] for i in idx]
            self.subsampled_requests += 1
        doc = self._post({
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_response_tokens,
            "frames": [_encode_frame(f) for f in frames],
        })
        if "text" not in doc:
            raise ProtocolError(f"{self.backend_id}: reply missing 'text'")
        return doc["text"]


class HttpAudioBackend(HttpBackendBase):
    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 backend_id: str = "http:alm", max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/audio", token, timeout_s, max_inflight)

    def generate(self, request: AudioRequest) -> str:
        doc = self._post({
            "prompt": request.prompt,
            "transcript": request.transcript,
            "clip": _encode_clip(request.clip),
        })
        if "text" not in doc:
            raise ProtocolError(f"{self.backend_id}: reply missing 'text'")
        return doc["text"]


class HttpFaceBackend(HttpBackendBase):
    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 backend_id: str = "http:face", max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/face", token, timeout_s, max_inflight)

    def detect(self, frame: Frame) -> BoundingBox | None:
        doc = self._post({"frame": _encode_frame(frame)})
        box = doc.get("box")
        if box is None:
            return None
        return BoundingBox(x=box["x"], y=box["y"], w=box["w"], h=box["h"])


class HttpPoseBackend(HttpBackendBase):
    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 backend_id: str = "http:pose", max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/pose", token, timeout_s, max_inflight)

    def estimate(self, frame: Frame) -> Skeleton:
        doc = self._post({"frame": _encode_frame(frame)})
        kps = tuple((int(j), float(x), float(y), float(c)) for j, x, y, c in doc.get("keypoints", []))
        return Skeleton(keypoints=kps)


class HttpDenoiseBackend(HttpBackendBase):
    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 backend_id: str = "http:denoise", max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/denoise", token, timeout_s, max_inflight)

    def enhance(self, clip: AudioClip) -> AudioClip:
        doc = self._post({"clip": _encode_clip(clip)})
        try:
            pcm = np.frombuffer(base64.b64decode(doc["pcm16_b64"]), dtype="<i2")
            rate = int(doc["sample_rate"])
        except (KeyError, ValueError) as exc:
            raise ProtocolError(f"{self.backend_id}: malformed clip reply") from exc
        return AudioClip(samples=pcm.astype(np.float32) / 32767.0, sample_rate=rate,
                         video_id=clip.video_id)


class HttpAsrBackend(HttpBackendBase):
    def __init__(self, base_url: str, token: str = "", timeout_s: float = 30.0,
                 backend_id: str = "http:asr", max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__(backend_id, base_url, "v1/transcribe", token, timeout_s, max_inflight)

    def transcribe(self, clip: AudioClip) -> str:
        doc = self._post({"clip": _encode_clip(clip)})
        if "text" not in doc:
            raise ProtocolError(f"{self.backend_id}: reply missing 'text'")
        return doc["text"]


# -- deterministic mocks -----------------------------------------------------

def _hash_unit(*parts: object) -> float:
    """Deterministic uniform [0, 1) from the given key parts."""
    key = "|".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def _overlaps(intervals, start_s: float, end_s: float) -> bool:
    return any(a < end_s and start_s < b for a, b in intervals)


@dataclass(frozen=True)
class StylePenalty:
    """Forces wrong answers for a prompt style on matching features."""

    styles: tuple[str, ...]
    categories: tuple[str, ...] = ()
    feature_ids: tuple[str, ...] = ()
    flip_prob: float = 1.0

    def applies(self, style: str, feature_id: str, category: str) -> bool:
        if style not in self.styles:
            return False
        if self.categories and category in self.categories:
            return True
        if self.feature_ids and feature_id in self.feature_ids:
            return True
        return not self.categories and not self.feature_ids


class MockVisionBackend(Backend):
    """Answers from sidecar truth: yes iff the segment overlaps a planted
    interval of the requested feature, then noise / style penalties flip
    the decision deterministically per (seed, video, feature, segment)."""

    fixed_latency = True

    def __init__(self, index: SidecarIndex, noise_p: float = 0.0, seed: int = 0,
                 penalties: tuple[StylePenalty, ...] = (),
                 max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:vlm", max_inflight)
        self.index = index
        self.noise_p = noise_p
        self.seed = seed
        self.penalties = penalties

    def _decide(self, meta: Mapping[str, object], start_s: float, end_s: float) -> bool:
        video_id = str(meta["video_id"])
        feature_id = str(meta["feature_id"])
        segment_index = int(meta["segment_index"])  # type: ignore[arg-type]
        style = str(meta.get("style", "expert"))
        category = str(meta.get("category", ""))
        entry = self.index.labels(video_id).get(feature_id)
        decision = bool(entry and entry.present and _overlaps(entry.intervals, start_s, end_s))
        if self.noise_p > 0 and _hash_unit(self.seed, video_id, feature_id, segment_index) < self.noise_p:
            decision = not decision
        for pen in self.penalties:
            if pen.applies(style, feature_id, category):
                if _hash_unit(self.seed, "penalty", video_id, feature_id, segment_index, style) < pen.flip_prob:
                    truth = bool(entry and entry.present and _overlaps(entry.intervals, start_s, end_s))
                    decision = not truth
        return decision

    def generate(self, request: VisionRequest) -> str:
        self._count()
        meta = request.meta
        name = str(meta.get("feature_id", "the feature")).replace("_", " ")
        if self._decide(meta, float(meta["start_s"]), float(meta["end_s"])):  # type: ignore[arg-type]
            return f"Yes. The figure shows {name} in this window."
        return f"No. The figure does not exhibit {name} in this window."


class MockAudioBackend(Backend):
    """Full-recording decisions straight from the planted audio labels."""

    fixed_latency = True

    def __init__(self, index: SidecarIndex, noise_p: float = 0.0, seed: int = 0,
                 max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:alm", max_inflight)
        self.index = index
        self.noise_p = noise_p
        self.seed = seed

    def generate(self, request: AudioRequest) -> str:
        self._count()
        meta = request.meta
        video_id = str(meta["video_id"])
        feature_id = str(meta["feature_id"])
        segment_index = int(meta.get("segment_index", 0))  # type: ignore[arg-type]
        entry = self.index.labels(video_id).get(feature_id)
        decision = bool(entry and entry.present)
        if self.noise_p > 0 and _hash_unit(self.seed, video_id, feature_id, segment_index) < self.noise_p:
            decision = not decision
        name = feature_id.replace("_", " ")
        if decision:
            return f"Yes. The recording contains {name}."
        return f"No. The recording does not contain {name}."


class MockFaceBackend(Backend):
    def __init__(self, index: SidecarIndex, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:face", max_inflight)
        self.index = index

    def detect(self, frame: Frame) -> BoundingBox | None:
        self._count()
        if frame.video_id is None or frame.frame_index is None:
            return None
        return self.index.face_box(frame.video_id, frame.frame_index)


class MockPoseBackend(Backend):
    def __init__(self, index: SidecarIndex, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:pose", max_inflight)
        self.index = index

    def estimate(self, frame: Frame) -> Skeleton:
        self._count()
        if frame.video_id is None or frame.frame_index is None:
            return Skeleton(keypoints=())
        sk = self.index.skeleton(frame.video_id, frame.frame_index)
        return sk if sk is not None else Skeleton(keypoints=())


class IdentityDenoiseBackend(Backend):
    """Speech-enhancement stand-in that passes audio through bit-exact."""

    def __init__(self, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:denoise", max_inflight)

    def enhance(self, clip: AudioClip) -> AudioClip:
        self._count()
        return clip


class GainDenoiseBackend(Backend):
    """Test double: scales samples by a constant factor."""

    def __init__(self, factor: float = 0.5):
        super().__init__(f"gain:{factor}")
        self.factor = factor

    def enhance(self, clip: AudioClip) -> AudioClip:
        self._count()
        return AudioClip(samples=clip.samples * self.factor, sample_rate=clip.sample_rate,
                         video_id=clip.video_id)


class MockAsrBackend(Backend):
    """Returns the clip's planted utterance; silence transcribes to ''."""

    def __init__(self, index: SidecarIndex, max_inflight: int = DEFAULT_MAX_INFLIGHT):
        super().__init__("mock:asr", max_inflight)
        self.index = index

    def transcribe(self, clip: AudioClip) -> str:
        self._count()
        if clip.video_id is None:
            return ""
        return self.index.utterance(clip.video_id)


@dataclass
class BackendSet:
    vlm: object
    alm: object
    face: object
    pose: object
    denoise: object
    asr: object

    def by_role(self, role: str):
        try:
            return getattr(self, role)
        except AttributeError:
            raise ConfigError(f"unknown backend role {role!r}") from None

    def total_inference_calls(self) -> int:
        return int(getattr(self.vlm, "calls", 0)) + int(getattr(self.alm, "calls", 0))

    def total_calls(self) -> int:
        """Every backend invocation of any role (the idempotency counter)."""
        return sum(int(getattr(b, "calls", 0))
                   for b in (self.vlm, self.alm, self.face, self.pose, self.denoise, self.asr))


_HTTP_CLASSES = {
    "vlm": HttpVisionBackend,
    "alm": HttpAudioBackend,
    "face": HttpFaceBackend,
    "pose": HttpPoseBackend,
    "denoise": HttpDenoiseBackend,
    "asr": HttpAsrBackend,
}


def make_backend(role: str, backend_id: str, index: SidecarIndex | None,
                 base_url: str = "", token: str = "", timeout_s: float = 30.0,
                 noise_p: float = 0.0, seed: int = 0,
                 penalties: tuple[StylePenalty, ...] = (),
                 max_inflight: int = DEFAULT_MAX_INFLIGHT):
    """Instantiate one backend from its config id ('mock:<role>' or 'http')."""
    if role not in ROLES:
        raise ConfigError(f"unknown backend role {role!r}")
    if backend_id == f"mock:{role}" or backend_id == "mock":
        if index is None and role not in ("denoise",):
            raise ConfigError(f"mock backend for {role} needs a sidecar index")
        if role == "vlm":
            return MockVisionBackend(index, noise_p=noise_p, seed=seed,
                                     penalties=penalties, max_inflight=max_inflight)
        if role == "alm":
            return MockAudioBackend(index, noise_p=noise_p, seed=seed, max_inflight=max_inflight)
        if role == "face":
            return MockFaceBackend(index, max_inflight=max_inflight)
        if role == "pose":
            return MockPoseBackend(index, max_inflight=max_inflight)
        if role == "denoise":
            return IdentityDenoiseBackend(max_inflight=max_inflight)
        if role == "asr":
            return MockAsrBackend(index, max_inflight=max_inflight)
    if backend_id == "http":
        if not base_url:
            raise ConfigError(f"backend {role}=http needs a base URL "
                              f"(config or SEMIO_BASE_URL_{role.upper()})")
        return _HTTP_CLASSES[role](base_url, token=token, timeout_s=timeout_s,
                                   max_inflight=max_inflight)
    raise ConfigError(f"unrecognized backend id {backend_id!r} for role {role}")
