"""Content-addressed PNG storage for archived board images."""

from __future__ import annotations

import hashlib
import os

from PIL import Image

from ..errors import StorageFailure


class ImageStore:
    """PNG payloads on disk keyed by content hash; records hold references."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(os.path.join(root, "images"), exist_ok=True)
        os.makedirs(os.path.join(root, "thumbs"), exist_ok=True)

    def _path(self, digest: str) -> str:
        return os.path.join(self.root, "images", digest[:2], f"{digest}.png")

    def put(self, png_bytes: bytes) -> str:
        digest = hashlib.sha256(png_bytes).hexdigest()
        path = self._path(digest)
        if not os.path.exists(path):
            try:
                os.makedirs(os.path.dirname(path), exist_ok=True)
                tmp = path + ".tmp"
                with open(tmp, "wb") as fh:
                    fh.write(png_bytes)
                os.replace(tmp, path)
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
        return digest

    def get(self, digest: str) -> bytes:
        try:
            with open(self._path(digest), "rb") as fh:
                return fh.read()
        except FileNotFoundError as exc:
            raise StorageFailure(f"missing image payload {digest}") from exc

    def thumbnail(self, digest: str, max_side: int = 256) -> bytes:
        cache = os.path.join(self.root, "thumbs", f"{digest}-{max_side}.png")
        if os.path.exists(cache):
            with open(cache, "rb") as fh:
                return fh.read()
        import io

        with Image.open(self._path(digest)) as im:
            im = im.copy()
        im.thumbnail((max_side, max_side))
        buf = io.BytesIO()
        im.save(buf, format="PNG")
        data = buf.getvalue()
        tmp = cache + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, cache)
        return data
