"""PDF page splitting.

Covers image-per-page PDFs natively (scanned documents and similar, where
each page is one embedded raster image with DCT or Flate encoding) by
walking the page tree and decoding each page's image XObject. Vector or
text-layer PDFs need an external rasterizer command (``pdftoppm``-style),
configurable per ingestion; without one they raise ``UnsupportedPdfError``.
"""

from __future__ import annotations

import io
import re
import shlex
import subprocess
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from PIL import Image


class PdfError(Exception):
    """Corrupt or unreadable PDF payload."""


class EncryptedPdfError(PdfError):
    """Encrypted PDFs are explicitly unsupported."""


class UnsupportedPdfError(PdfError):
    """PDF is not image-per-page and no external rasterizer is configured."""


@dataclass(frozen=True)
class PdfPageImage:
    page_number: int
    image: Image.Image
    dpi: int


_OBJ_RE = re.compile(rb"(\d+)\s+\d+\s+obj")
_REF_RE = re.compile(rb"(\d+)\s+\d+\s+R")
_WS = b" \t\r\n"


def _read_dict(data: bytes, start: int) -> tuple[bytes, int]:
    """Return the balanced ``<<...>>`` dictionary starting at ``start``."""
    depth = 0
    i = start
    while i < len(data) - 1:
        pair = data[i : i + 2]
        if pair == b"<<":
            depth += 1
            i += 2
        elif pair == b">>":
            depth -= 1
            i += 2
            if depth == 0:
                return data[start:i], i
        else:
            i += 1
    raise PdfError("unterminated dictionary")


def _dict_int(dict_bytes: bytes, key: bytes) -> Optional[int]:
    m = re.search(re.escape(key) + rb"\s+(\d+)", dict_bytes)
    return int(m.group(1)) if m else None


def _dict_name(dict_bytes: bytes, key: bytes) -> Optional[bytes]:
    m = re.search(re.escape(key) + rb"\s*/(\w+)", dict_bytes)
    return m.group(1) if m else None


def _iter_objects(data: bytes) -> Iterator[tuple[int, bytes, Optional[bytes]]]:
    """Yield (object number, dict bytes, stream bytes) for each indirect object."""
    pos = 0
    while True:
        m = _OBJ_RE.search(data, pos)
        if not m:
            return
        num = int(m.group(1))
        i = m.end()
        while i < len(data) and data[i] in _WS:
            i += 1
        if data[i : i + 2] != b"<<":
            end = data.find(b"endobj", i)
            if end < 0:
                return
            yield num, data[i:end], None
            pos = end + 6
            continue
        try:
            dict_bytes, i = _read_dict(data, i)
        except PdfError:
            return
        j = i
        while j < len(data) and data[j] in _WS:
            j += 1
        stream = None
        if data[j : j + 6] == b"stream":
            j += 6
            if data[j : j + 2] == b"\r\n":
                j += 2
            elif data[j : j + 1] == b"\n":
                j += 1
            length = _dict_int(dict_bytes, b"/Length")
            if length is not None and j + length <= len(data):
                stream = data[j : j + length]
                end = data.find(b"endstream", j + length)
            else:
                end = data.find(b"endstream", j)
                stream = data[j:end].rstrip(b"\r\n") if end >= 0 else None
            if end < 0:
                raise PdfError("unterminated stream")
            pos = data.find(b"endobj", end)
            pos = pos + 6 if pos >= 0 else end + 9
        else:
            end = data.find(b"endobj", i)
            pos = end + 6 if end >= 0 else i
        yield num, dict_bytes, stream


def _collect_kids(objects: dict[int, bytes], node_num: int, acc: list[int]) -> None:
    body = objects.get(node_num, b"")
    kids_match = re.search(rb"/Kids\s*\[(.*?)\]", body, re.DOTALL)
    if kids_match:
        for ref in _REF_RE.finditer(kids_match.group(1)):
            _collect_kids(objects, int(ref.group(1)), acc)
    elif re.search(rb"/Type\s*/Page\b", body):
        acc.append(node_num)


def _decode_image_object(dict_bytes: bytes, stream: bytes) -> Image.Image:
    filter_name = _dict_name(dict_bytes, b"/Filter")
    if filter_name == b"DCTDecode":
        return Image.open(io.BytesIO(stream)).copy()
    if filter_name == b"FlateDecode":
        width = _dict_int(dict_bytes, b"/Width")
        height = _dict_int(dict_bytes, b"/Height")
        colorspace = _dict_name(dict_bytes, b"/ColorSpace")
        if not width or not height:
            raise PdfError("image object missing dimensions")
        raw = zlib.decompress(stream)
        mode = {b"DeviceRGB": "RGB", b"DeviceGray": "L"}.get(colorspace or b"")
        if mode is None:
            raise UnsupportedPdfError(f"unsupported color space {colorspace!r}")
        return Image.frombytes(mode, (width, height), raw)
    raise UnsupportedPdfError(f"unsupported image filter {filter_name!r}")


def _page_dpi(page_dict: bytes, image: Image.Image, fallback_dpi: int) -> int:
    box = re.search(
        rb"/MediaBox\s*\[\s*[\d.]+\s+[\d.]+\s+([\d.]+)\s+[\d.]+\s*\]", page_dict
    )
    if box:
        width_points = float(box.group(1))
        if width_points > 0:
            return max(36, round(image.width * 72.0 / width_points))
    return fallback_dpi


def extract_pdf_pages(data: bytes, fallback_dpi: int = 150) -> list[PdfPageImage]:
    """Extract one raster image per page from an image-based PDF."""
    if not data.startswith(b"%PDF"):
        raise PdfError("not a PDF (missing %PDF header)")
    if b"/Encrypt" in data:
        raise EncryptedPdfError("encrypted PDFs are not supported")

    objects: dict[int, bytes] = {}
    streams: dict[int, bytes] = {}
    for num, dict_bytes, stream in _iter_objects(data):
        objects[num] = dict_bytes
        if stream is not None:
            streams[num] = stream

    # Page order comes from the catalog's page tree when present.
    page_nums: list[int] = []
    for num, body in objects.items():
        if re.search(rb"/Type\s*/Catalog\b", body):
            pages_ref = re.search(rb"/Pages\s+(\d+)\s+\d+\s+R", body)
            if pages_ref:
                _collect_kids(objects, int(pages_ref.group(1)), page_nums)
            break
    if not page_nums:
        page_nums = sorted(
            num for num, body in objects.items() if re.search(rb"/Type\s*/Page\b", body)
        )

    pages: list[PdfPageImage] = []
    for index, page_num in enumerate(page_nums, start=1):
        page_dict = objects.get(page_num, b"")
        image_obj = None
        xobj = re.search(rb"/XObject\s*<<(.*?)>>", page_dict, re.DOTALL)
        if xobj:
            for ref in _REF_RE.finditer(xobj.group(1)):
                candidate = int(ref.group(1))
                body = objects.get(candidate, b"")
                if re.search(rb"/Subtype\s*/Image", body) and candidate in streams:
                    image_obj = candidate
                    break
        if image_obj is None:
            raise UnsupportedPdfError(
                f"page {index} carries no embedded page image; "
                "configure an external rasterizer for vector PDFs"
            )
        image = _decode_image_object(objects[image_obj], streams[image_obj])
        pages.append(
            PdfPageImage(
                page_number=index,
                image=image,
                dpi=_page_dpi(page_dict, image, fallback_dpi),
            )
        )
    if not pages:
        raise PdfError("PDF contains no pages")
    return pages


class ExternalRasterizer:
    """Rasterize PDFs through an external command.

    The command template takes ``{input}``, ``{outdir}`` and ``{dpi}``
    placeholders and must write one PNG per page into ``{outdir}``; pages are
    read back in sorted filename order.
    """

    def __init__(self, command_template: str, dpi: int = 150, timeout: float = 300.0):
        self.command_template = command_template
        self.dpi = dpi
        self.timeout = timeout

    def rasterize(self, data: bytes) -> list[PdfPageImage]:
        with tempfile.TemporaryDirectory(prefix="trialmatch-raster-") as tmp:
            pdf_path = Path(tmp) / "input.pdf"
            outdir = Path(tmp) / "pages"
            outdir.mkdir()
            pdf_path.write_bytes(data)
            command = [
                part.format(input=str(pdf_path), outdir=str(outdir), dpi=self.dpi)
                for part in shlex.split(self.command_template)
            ]
            try:
                subprocess.run(
                    command, check=True, capture_output=True, timeout=self.timeout
                )
            except (subprocess.CalledProcessError, subprocess.TimeoutExpired, OSError) as exc:
                raise PdfError(f"external rasterizer failed: {exc}")
            pngs = sorted(outdir.glob("*.png"))
            if not pngs:
                raise PdfError("external rasterizer produced no pages")
            return [
                PdfPageImage(
                    page_number=i, image=Image.open(p).copy(), dpi=self.dpi
                )
                for i, p in enumerate(pngs, start=1)
            ]
