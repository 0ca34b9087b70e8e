"""HTTP query service over a loaded index.

JSON bodies carry a versioned `api_version` field. The index is immutable;
uploaded query images are described on the fly under the index's
configuration and never added to it. Spread overrides re-derive envelopes
from the stored raw features (cached per spread value).
"""

from __future__ import annotations

import io
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .errors import FuzzyNearError
from .nearness import MEASURES
from .perceptual import describe_image
from .retrieval import (
    DEFAULT_GRID_DEPTH,
    DatasetIndex,
    IMAGE_EXTENSIONS,
    query,
    query_by_id,
    refuzzify,
)
from .tolerance import (
    DEFAULT_ENVELOPE,
    DEFAULT_EPSILON,
    DEFAULT_EPSILON_PRIME,
    ENVELOPES,
    ToleranceConfig,
)

API_VERSION = "1"
MAX_UPLOAD_BYTES = 10 * 1024 * 1024
THUMB_MAX_SIDE = 128


def _bad_request(code: str, message: str) -> HTTPException:
    return HTTPException(status_code=400,
                         detail={"code": code, "message": message})


def _not_found(message: str) -> HTTPException:
    return HTTPException(status_code=404,
                         detail={"code": "not_found", "message": message})


def _parse_path_id(text: str):
    return int(text) if text.isdigit() else text


class _SpreadCache:
    """Per-spread refuzzified views of the base index (immutable values)."""

    def __init__(self, base: DatasetIndex):
        self._base = base
        self._views: dict = {}
        self._lock = threading.Lock()

    def get(self, spread) -> DatasetIndex:
        if spread is None or spread == self._base.config.bank.it2_spread:
            return self._base
        key = spread
        with self._lock:
            view = self._views.get(key)
        if view is None:
            view = refuzzify(self._base, spread)
            with self._lock:
                self._views[key] = view
        return view


def _parse_query_params(raw: dict) -> dict:
    known = {"image_id", "measure", "epsilon", "epsilon_prime", "spread",
             "k", "envelope"}
    unknown = set(raw) - known - {"image"}
    if unknown:
        raise _bad_request("unknown_field",
                           f"unknown field(s): {sorted(unknown)}")
    params = {
        "measure": raw.get("measure", "it2bfnm"),
        "envelope": raw.get("envelope", DEFAULT_ENVELOPE),
    }
    if params["measure"] not in MEASURES:
        raise _bad_request("bad_measure",
                           f"measure must be one of {list(MEASURES)}")
    if params["envelope"] not in ENVELOPES:
        raise _bad_request("bad_envelope",
                           f"envelope must be one of {list(ENVELOPES)}")
    try:
        params["epsilon"] = float(raw.get("epsilon", DEFAULT_EPSILON))
        params["epsilon_prime"] = float(raw.get("epsilon_prime",
                                                DEFAULT_EPSILON_PRIME))
        params["k"] = int(raw.get("k", DEFAULT_GRID_DEPTH))
    except (TypeError, ValueError):
        raise _bad_request("bad_number",
                           "epsilon, epsilon_prime, and k must be numeric")
    spread = raw.get("spread")
    if spread is None or (isinstance(spread, str)
                          and spread.strip().lower() in ("", "none")):
        params["spread"] = None
        params["override"] = False
    else:
        try:
            params["spread"] = float(spread)
        except (TypeError, ValueError):
            raise _bad_request("bad_number", "spread must be numeric")
        if params["spread"] < 0:
            raise _bad_request("bad_spread", "spread must be nonnegative")
        params["override"] = True
    if not params["epsilon"] > 0:
        raise _bad_request("bad_epsilon", "epsilon must be positive")
    if not params["epsilon_prime"] > params["epsilon"]:
        raise _bad_request(
            "bad_epsilon_prime",
            "epsilon_prime must be strictly greater than epsilon")
    if params["k"] < 1:
        raise _bad_request("bad_k", "k must be at least 1")
    if "image_id" in raw and raw["image_id"] is not None:
        image_id = raw["image_id"]
        params["image_id"] = (image_id if isinstance(image_id, int)
                              else _parse_path_id(str(image_id)))
    else:
        params["image_id"] = None
    return params


def create_app(index: DatasetIndex, dataset_root=None, static_dir=None,
               jobs: int = 1) -> FastAPI:
    app = FastAPI(title="fuzzynear query service", docs_url=None,
                  redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    cache = _SpreadCache(index)
    root = Path(dataset_root) if dataset_root is not None else None
    thumbs: dict = {}

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse({"api_version": API_VERSION, "error": detail},
                            status_code=exc.status_code)

    def _image_path(image_id) -> Path:
        if image_id not in index:
            raise _not_found(f"image id {image_id!r} is not in the index")
        if root is None:
            raise _not_found("the service was started without a dataset "
                             "directory, so image bytes are unavailable")
        name = index.filename_of(image_id)
        if name is not None and (root / name).is_file():
            return root / name
        for ext in IMAGE_EXTENSIONS:
            candidate = root / f"{image_id}{ext}"
            if candidate.is_file():
                return candidate
        raise _not_found(f"no file for image id {image_id!r} under {root}")

    @app.get("/api/health")
    def health():
        return {"api_version": API_VERSION, "status": "ok",
                "fingerprint": index.config.fingerprint(),
                "images": index.image_count}

    @app.get("/api/config")
    def config():
        bank = index.config.bank
        categories = {str(cat): size
                      for cat, size in sorted(
                          index.category_sizes().items(),
                          key=lambda kv: (kv[0] is None, kv[0]))}
        return {
            "api_version": API_VERSION,
            "fingerprint": index.config.fingerprint(),
            "measures": list(MEASURES),
            "defaults": {"measure": "it2bfnm",
                         "epsilon": DEFAULT_EPSILON,
                         "epsilon_prime": DEFAULT_EPSILON_PRIME,
                         "k": DEFAULT_GRID_DEPTH,
                         "envelope": DEFAULT_ENVELOPE,
                         "spread": bank.it2_spread},
            "describe": {"block_width": index.config.block_width,
                         "block_height": index.config.block_height,
                         "probes": list(index.config.probes),
                         "bank": {"family": bank.family, "m": bank.m,
                                  "it2_spread": bank.it2_spread,
                                  "alpha": bank.alpha, "beta": bank.beta,
                                  "literal_centers": bank.literal_centers}},
            "dataset": {"images": index.image_count,
                        "blocks": index.block_count,
                        "categories": categories,
                        "image_ids": [str(i) for i in index.image_ids]},
        }

    @app.post("/api/query")
    async def api_query(request: Request):
        content_type = request.headers.get("content-type", "")
        upload_bytes = None
        upload_name = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            raw = {key: form[key] for key in form if key != "image"}
            upload = form.get("image")
            if upload is not None:
                upload_bytes = await upload.read()
                upload_name = getattr(upload, "filename", None) or "upload"
        else:
            try:
                raw = await request.json()
            except Exception:
                raise _bad_request("bad_body",
                                   "expected a JSON body or multipart form")
            if not isinstance(raw, dict):
                raise _bad_request("bad_body", "expected a JSON object")
        params = _parse_query_params(raw)
        if (params["image_id"] is None) == (upload_bytes is None):
            raise _bad_request(
                "bad_source",
                "provide exactly one of image_id or an uploaded image")
        if upload_bytes is not None and len(upload_bytes) > MAX_UPLOAD_BYTES:
            raise HTTPException(
                status_code=413,
                detail={"code": "upload_too_large",
                        "message": f"upload exceeds "
                                   f"{MAX_UPLOAD_BYTES} bytes"})

        view = cache.get(params["spread"]) if params["override"] else index
        cfg = ToleranceConfig(epsilon=params["epsilon"],
                              epsilon_prime=params["epsilon_prime"])
        started = time.perf_counter()
        try:
            if params["image_id"] is not None:
                if params["image_id"] not in view:
                    raise _not_found(f"image id {params['image_id']!r} is "
                                     f"not in the index")
                result = query_by_id(view, params["image_id"],
                                     params["measure"], cfg, params["k"],
                                     envelope=params["envelope"], jobs=jobs)
            else:
                try:
                    with Image.open(io.BytesIO(upload_bytes)) as img:
                        pixels = np.asarray(img.convert("RGB"))
                except OSError as exc:
                    raise _bad_request("bad_image",
                                       f"cannot decode upload: {exc}")
                descs = describe_image(pixels, view.config,
                                       image_id=upload_name)
                result = query(view, descs, params["measure"], cfg,
                               params["k"], query_id=upload_name,
                               envelope=params["envelope"], jobs=jobs)
        except FuzzyNearError as exc:
            raise _bad_request(exc.__class__.__name__, str(exc))
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        results = []
        for rank, (candidate_id, score) in enumerate(result.entries, 1):
            results.append({
                "rank": rank,
                "image_id": str(candidate_id),
                "category": view.category_of(candidate_id),
                "value": score.value,
                "similarity": 1.0 - score.value,
                "upper": score.upper_value,
                "lower": score.lower_value,
                "classes": score.class_count,
                "budget_exceeded": score.budget_exceeded,
            })
        return {
            "api_version": API_VERSION,
            "query_id": str(result.query_id),
            "measure": result.measure,
            "epsilon": params["epsilon"],
            "epsilon_prime": params["epsilon_prime"],
            "spread": params["spread"] if params["override"]
            else index.config.bank.it2_spread,
            "elapsed_ms": elapsed_ms,
            "budget_exceeded": any(r["budget_exceeded"] for r in results),
            "results": results,
        }

    @app.get("/api/image/{image_id}")
    def image_bytes(image_id: str):
        path = _image_path(_parse_path_id(image_id))
        media = "image/png" if path.suffix.lower() == ".png" else "image/jpeg"
        return Response(content=path.read_bytes(), media_type=media)

    @app.get("/api/image/{image_id}/thumb")
    def image_thumb(image_id: str):
        parsed = _parse_path_id(image_id)
        cached = thumbs.get(parsed)
        if cached is None:
            path = _image_path(parsed)
            with Image.open(path) as img:
                img = img.convert("RGB")
                img.thumbnail((THUMB_MAX_SIDE, THUMB_MAX_SIDE))
                buf = io.BytesIO()
                img.save(buf, format="PNG")
            cached = buf.getvalue()
            thumbs[parsed] = cached
        return Response(content=cached, media_type="image/png")

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app
