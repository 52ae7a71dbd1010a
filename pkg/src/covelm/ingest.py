"""Manifest-driven corpus loading and the on-disk feature cache."""
import csv
import io
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .elm import CLASSES
from .errors import InvalidInput, IoError, LayoutMismatch, ParseError
from .evaluation import thread_count
from .features import LAYOUT_DIGEST, N_FEATURES, extract_features, feature_names
from .preprocess import (
    DEFAULT_BINS,
    DEFAULT_CLIP_LIMIT,
    DEFAULT_TILES,
    as_gray,
    preprocess_pipeline,
    to_gray_array,
)

log = logging.getLogger(__name__)

MANIFEST_HEADER = ("path", "label", "view")
FRONTAL_VIEWS = ("PA", "AP")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif", ".pgm")

# folder names seen in the public COVID / pneumonia CXR collections
FOLDER_ALIASES = {
    "covid": "covid",
    "covid19": "covid",
    "covid-19": "covid",
    "covid_19": "covid",
    "normal": "normal",
    "pneumonia": "pneumonia",
    "viral pneumonia": "pneumonia",
    "viral_pneumonia": "pneumonia",
    "bacterial pneumonia": "pneumonia",
    "bacterial_pneumonia": "pneumonia",
}

_CACHE_HEAD = re.compile(r"^image_id\[layout=(?P<digest>[0-9a-f]+)(?P<rest>(;[^\]]*)?)\]$")


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    view: str
    line: int = field(default=0, compare=False)


def load_manifest(path) -> List[ManifestRecord]:
    """Parse a ``path,label,view`` CSV. Relative paths stay as written."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("manifest is empty; expected header path,label,view", line=1) from None
    if tuple(h.strip().lower() for h in header) != MANIFEST_HEADER:
        raise ParseError(f"expected header path,label,view, got {','.join(header)}", line=1)
    records = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=line)
        p, label, view = (c.strip() for c in row)
        if not p:
            raise ParseError("empty path", line=line)
        label = label.lower()
        if label not in CLASSES:
            raise ParseError(f"unknown label {label!r}; expected one of {CLASSES}", line=line)
        records.append(ManifestRecord(p, label, view, line))
    return records


def write_manifest(records: Sequence[ManifestRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in records:
            w.writerow((r.path, r.label, r.view))


def filter_frontal(records: Sequence[ManifestRecord]) -> List[ManifestRecord]:
    """Keep PA and AP views (case-insensitive), preserving order."""
    kept = [r for r in records if r.view.strip().upper() in FRONTAL_VIEWS]
    dropped = len(records) - len(kept)
    if dropped:
        log.warning("dropped %d non-frontal record(s) of %d", dropped, len(records))
    return kept


def manifest_from_folders(root, view: str = "PA") -> List[ManifestRecord]:
    """Build records from a ``<root>/<class folder>/<image>`` layout.

    Class folders are matched case-insensitively against common dataset
    names; unrecognised folders are skipped. Paths are relative to ``root``.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"{root} is not a directory")
    records = []
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        label = FOLDER_ALIASES.get(folder.name.strip().lower())
        if label is None:
            log.warning("skipping unrecognised folder %s", folder.name)
            continue
        for img in sorted(folder.rglob("*")):
            if img.is_file() and img.suffix.lower() in IMAGE_SUFFIXES:
                records.append(ManifestRecord(img.relative_to(root).as_posix(), label, view))
    return records


def decode_image(path) -> np.ndarray:
    """Read a raster file as a float grayscale array (see ``to_gray_array``)."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
            elif im.mode in ("CMYK", "YCbCr", "LAB", "HSV"):
                im = im.convert("RGB")
            elif im.mode == "LA":
                im = im.convert("L")
            arr = np.asarray(im)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise IoError(f"cannot decode image {path}: {exc}") from exc
    try:
        return to_gray_array(arr)
    except InvalidInput as exc:
        raise IoError(f"cannot decode image {path}: {exc}") from exc


@dataclass
class CacheSummary:
    rows: int
    counts: Dict[str, int]
    layout_digest: str
    errors: List[Tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "counts": self.counts,
            "layout_digest": self.layout_digest,
            "errors": [{"path": p, "error": e} for p, e in self.errors],
        }


def _format_float(x: float) -> str:
    return repr(float(x))


def cache_header(clahe_params: Optional[dict] = None) -> List[str]:
    head = f"image_id[layout={LAYOUT_DIGEST}"
    if clahe_params:
        tiles = clahe_params["tiles"]
        head += (f";clip_limit={clahe_params['clip_limit']!r}"
                 f";tiles={tiles[0]}x{tiles[1]};bins={clahe_params['bins']}")
    return [head + "]", "label"] + feature_names()


def write_feature_cache(path, ids: Sequence[str], labels: Sequence[str], X, clahe_params=None) -> None:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES or X.shape[0] != len(ids) or len(ids) != len(labels):
        raise InvalidInput(f"cache rows need {N_FEATURES} features per id/label pair")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cache_header(clahe_params))
            for ident, lab, row in zip(ids, labels, X):
                w.writerow([ident, lab] + [_format_float(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write feature cache {path}: {exc}") from exc


@dataclass
class FeatureCache:
    ids: List[str]
    labels: List[str]
    X: np.ndarray
    layout_digest: str
    params: Dict[str, str]


def read_feature_cache(path) -> FeatureCache:
    """Load a feature cache, checking its layout digest against this build."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot read feature cache {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("feature cache is empty", line=1) from None
        m = _CACHE_HEAD.match(header[0]) if header else None
        if m is None:
            raise ParseError("first header cell must be image_id[layout=<digest>...]", line=1)
        digest = m.group("digest")
        if digest != LAYOUT_DIGEST:
            raise LayoutMismatch(f"cache layout {digest} does not match this build ({LAYOUT_DIGEST})")
        if header[1:] != ["label"] + feature_names():
            raise ParseError("feature column names do not match the layout", line=1)
        params = dict(kv.split("=", 1) for kv in m.group("rest").split(";") if "=" in kv)
        ids, labels, rows = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != N_FEATURES + 2:
                raise ParseError(f"expected {N_FEATURES + 2} fields, got {len(row)}", line=reader.line_num)
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=reader.line_num) from None
            ids.append(row[0])
            labels.append(row[1])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), N_FEATURES)
    return FeatureCache(ids, labels, X, digest, params)


def image_features(path, clahe_params: dict) -> np.ndarray:
    img = as_gray(decode_image(path))
    pre = preprocess_pipeline(img, clip_limit=clahe_params["clip_limit"],
                              tiles=clahe_params["tiles"], bins=clahe_params["bins"])
    return extract_features(pre)


def default_clahe_params() -> dict:
    return {"clip_limit": DEFAULT_CLIP_LIMIT, "tiles": DEFAULT_TILES, "bins": DEFAULT_BINS}


def build_feature_cache(records: Sequence[ManifestRecord], out_path, clahe_params: Optional[dict] = None,
                        root=None, strict: bool = False) -> CacheSummary:
    """Decode, preprocess and featurise every record, then write the cache.

    Relative record paths resolve against ``root``. In strict mode the first
    failing image raises ``IoError``; otherwise it is logged in the summary
    and skipped. Rows are written in record order regardless of threading.
    """
    params = default_clahe_params()
    if clahe_params:
        params.update(clahe_params)
    root = Path(root) if root is not None else Path(".")

    def work(rec):
        p = Path(rec.path)
        if not p.is_absolute():
            p = root / p
        try:
            return image_features(p, params), None
        except (IoError, InvalidInput) as exc:
            if strict:
                raise IoError(f"{rec.path}: {exc}") from exc
            return None, str(exc)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, records))
    else:
        results = [work(r) for r in records]

    ids, labels, rows, errors = [], [], [], []
    counts = {c: 0 for c in CLASSES}
    for rec, (vec, err) in zip(records, results):
        if err is not None:
            log.error("skipping %s: %s", rec.path, err)
            errors.append((rec.path, err))
            continue
        ids.append(rec.path)
        labels.append(rec.label)
        rows.append(vec)
        counts[rec.label] = counts.get(rec.label, 0) + 1
    X = np.array(rows).reshape(len(rows), N_FEATURES)
    write_feature_cache(out_path, ids, labels, X, params)
    return CacheSummary(rows=len(ids), counts=counts, layout_digest=LAYOUT_DIGEST, errors=errors)


def manifest_root(manifest_path) -> Path:
    return Path(os.path.dirname(os.path.abspath(manifest_path)))
