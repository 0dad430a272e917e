"""Prompted multimodal detection of seizure-semiology features.

Subpackages split along pipeline stages: catalog (feature inventory and
prompts), ingest (manifest + labels), segmenter (windows + frame
sampling), enhance (face crop / pose overlay / audio chain), backends
(model clients + mocks), detect (dispatch, parsing, any-yes verdicts),
evaluate (folds, metrics, calibration), faithfulness + review_api
(expert explanation scoring), fixtures (synthetic labeled clips), and
cli/pipeline (orchestration).
"""

__version__ = "0.1.0"
