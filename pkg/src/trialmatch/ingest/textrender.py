"""Deterministic rendering of plain-text notes to page images.

Used to exercise the visual pipeline on text-only corpora: notes render to
US-Letter pages at a caller-chosen DPI with a fixed monospace layout, so the
same text and DPI always produce byte-identical PNGs.
"""

from __future__ import annotations

import io
import textwrap

from PIL import Image, ImageDraw, ImageFont

PAGE_WIDTH_INCHES = 8.5
PAGE_HEIGHT_INCHES = 11.0
DEFAULT_LINES_PER_PAGE = 60
DEFAULT_COLUMNS = 100
MIN_DPI = 36
_MARGIN_INCHES = 0.25


def paginate_text(
    note_text: str,
    lines_per_page: int = DEFAULT_LINES_PER_PAGE,
    columns: int = DEFAULT_COLUMNS,
) -> list[list[str]]:
    """Split note text into pages of wrapped lines (fixed geometry)."""
    logical_lines: list[str] = []
    for raw_line in note_text.splitlines():
        if len(raw_line) <= columns:
            logical_lines.append(raw_line)
        else:
            logical_lines.extend(textwrap.wrap(raw_line, width=columns) or [""])
    if not logical_lines:
        logical_lines = [""]
    return [
        logical_lines[i : i + lines_per_page]
        for i in range(0, len(logical_lines), lines_per_page)
    ]


def render_text_note(
    note_text: str,
    dpi: int,
    lines_per_page: int = DEFAULT_LINES_PER_PAGE,
    columns: int = DEFAULT_COLUMNS,
) -> list[bytes]:
    """Render a note to one or more PNG page images.

    Pagination is purely line-count based: ceil(lines / lines_per_page)
    pages, long lines wrapped at a fixed column count.
    """
    if not note_text.strip():
        raise ValueError("note text is empty")
    if dpi < MIN_DPI:
        raise ValueError(f"dpi {dpi} below minimum {MIN_DPI}")
    if lines_per_page < 1:
        raise ValueError("lines_per_page must be >= 1")

    width = round(PAGE_WIDTH_INCHES * dpi)
    height = round(PAGE_HEIGHT_INCHES * dpi)
    margin = round(_MARGIN_INCHES * dpi)
    line_height = (height - 2 * margin) / lines_per_page
    font = ImageFont.load_default()

    pages: list[bytes] = []
    for page_lines in paginate_text(note_text, lines_per_page, columns):
        image = Image.new("L", (width, height), color=255)
        draw = ImageDraw.Draw(image)
        for row, line in enumerate(page_lines):
            if line:
                draw.text((margin, round(margin + row * line_height)), line, fill=0, font=font)
        buffer = io.BytesIO()
        image.save(buffer, format="PNG")
        pages.append(buffer.getvalue())
    return pages
