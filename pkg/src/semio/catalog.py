"""The fixed inventory of semiological features and their prompts.

The default catalog ships 20 features in three categories. Category
determines the signal-enhancement route::

    facial     -> face_crop
    limb_body  -> pose_overlay
    audio      -> audio_chain

Each feature carries prompt text per style. ``expert`` is mandatory;
``simple`` and ``ilae_concise`` are optional and fall back to ``expert``
(the fallback is flagged on the resolved prompt). Catalogs are immutable
after load and safe to share across workers.
"""

from __future__ import annotations

import json
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import CatalogError, FeatureNotFoundError

PROMPT_STYLES = ("expert", "simple", "ilae_concise")
CATEGORIES = ("facial", "limb_body", "audio")
ENHANCEMENTS = ("face_crop", "pose_overlay", "audio_chain", "none")

#: category -> enhancement routing enforced on every catalog entry
CATEGORY_ENHANCEMENT = {
    "facial": "face_crop",
    "limb_body": "pose_overlay",
    "audio": "audio_chain",
}

#: expected per-category feature counts of the default 20-feature inventory
DEFAULT_CATEGORY_COUNTS = {"facial": 7, "limb_body": 11, "audio": 2}


@dataclass(frozen=True)
class FeatureSpec:
    feature_id: str
    display_name: str
    category: str
    enhancement: str
    prompts: Mapping[str, str]
    wording: str = "reconstructed"

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise CatalogError(f"{self.feature_id}: unknown category {self.category!r}")
        if self.enhancement not in ENHANCEMENTS:
            raise CatalogError(f"{self.feature_id}: unknown enhancement {self.enhancement!r}")
        unknown = set(self.prompts) - set(PROMPT_STYLES)
        if unknown:
            raise CatalogError(f"{self.feature_id}: unknown prompt styles {sorted(unknown)}")
        if not self.prompts.get("expert", "").strip():
            raise CatalogError(f"{self.feature_id}: missing required 'expert' prompt")


@dataclass(frozen=True)
class ResolvedPrompt:
    """Prompt text plus metadata about which style actually served it."""

    text: str
    style_requested: str
    style_used: str

    @property
    def fallback(self) -> bool:
        return self.style_used != self.style_requested


class Catalog(Sequence[FeatureSpec]):
    """Immutable, id-indexed sequence of FeatureSpecs."""

    def __init__(self, features: Sequence[FeatureSpec]):
        self._features = tuple(features)
        self._by_id: dict[str, FeatureSpec] = {}
        for f in self._features:
            if f.feature_id in self._by_id:
                raise CatalogError(f"duplicate feature_id {f.feature_id!r}")
            self._by_id[f.feature_id] = f

    def __len__(self) -> int:
        return len(self._features)

    def __getitem__(self, index):  # type: ignore[override]
        return self._features[index]

    def __iter__(self) -> Iterator[FeatureSpec]:
        return iter(self._features)

    def feature(self, feature_id: str) -> FeatureSpec:
        try:
            return self._by_id[feature_id]
        except KeyError:
            raise FeatureNotFoundError(f"unknown feature_id {feature_id!r}") from None

    def __contains__(self, feature_id: object) -> bool:
        return feature_id in self._by_id

    @property
    def feature_ids(self) -> tuple[str, ...]:
        return tuple(f.feature_id for f in self._features)

    def by_category(self, category: str) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self._features if f.category == category)

    def category_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in CATEGORIES}
        for f in self._features:
            counts[f.category] += 1
        return counts


def _parse_entry(entry: dict) -> FeatureSpec:
    try:
        return FeatureSpec(
            feature_id=entry["feature_id"],
            display_name=entry["display_name"],
            category=entry["category"],
            enhancement=entry["enhancement"],
            prompts=dict(entry["prompts"]),
            wording=entry.get("wording", "reconstructed"),
        )
    except KeyError as exc:
        raise CatalogError(f"catalog entry missing field {exc}") from exc


def load_catalog(path: str | Path, strict: bool = True) -> Catalog:
    """Load a catalog file.

    Strict mode additionally requires the default inventory shape: exactly
    20 features, per-category counts 7/11/2, and the category->enhancement
    routing. Non-strict load still enforces per-feature invariants and
    unique ids, so custom reduced catalogs remain usable in tests.
    """
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CatalogError(f"cannot load catalog {path}: {exc}") from exc
    entries = doc["features"] if isinstance(doc, dict) else doc
    catalog = Catalog([_parse_entry(e) for e in entries])
    for f in catalog:
        expected = CATEGORY_ENHANCEMENT[f.category]
        if f.enhancement != expected:
            raise CatalogError(
                f"{f.feature_id}: category {f.category} must route to {expected}, got {f.enhancement}"
            )
    if strict:
        counts = catalog.category_counts()
        if len(catalog) != 20 or counts != DEFAULT_CATEGORY_COUNTS:
            raise CatalogError(
                f"strict catalog must have 20 features with counts {DEFAULT_CATEGORY_COUNTS}, "
                f"got {len(catalog)} with {counts}"
            )
    return catalog


def default_catalog_path() -> Path:
    return Path(str(resources.files("semio").joinpath("data/default_catalog.json")))


def load_default_catalog() -> Catalog:
    return load_catalog(default_catalog_path(), strict=True)


def get_prompt(catalog: Catalog, feature_id: str, style: str) -> ResolvedPrompt:
    """Resolve prompt text for a feature and style.

    Unknown styles and styles the feature does not define fall back to
    ``expert``; the returned metadata records the fallback.
    """
    feature = catalog.feature(feature_id)
    style_used = style if style in feature.prompts else "expert"
    if style not in PROMPT_STYLES:
        style_used = "expert"
    return ResolvedPrompt(text=feature.prompts[style_used], style_requested=style, style_used=style_used)
