"""Patient ingestion: split documents into pages, redact, embed, store.

Page and document ids are content-derived, so re-ingesting identical bytes
is a no-op for the vector store (upsert replaces equal rows) and yields the
identical PatientRecord.
"""

from __future__ import annotations

import hashlib
import io
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from PIL import Image, UnidentifiedImageError

from ..core import MediaType, PatientRecord, RecordPage, SourceDocument, StoredVector
from ..gateway import Gateway
from ..ids import content_id
from ..store import VectorStore
from .pdfpages import EncryptedPdfError, ExternalRasterizer, PdfError, extract_pdf_pages
from .redact import RedactionError, RedactionPolicy, redact_page
from .textrender import render_text_note

logger = logging.getLogger(__name__)

DEFAULT_TEXT_DPI = 72
DEFAULT_PDF_DPI = 150


class IngestError(Exception):
    """Hard ingestion failure naming the offending document."""


@dataclass(frozen=True)
class QuarantineEntry:
    patient_id: str
    document_id: str
    filename: str
    page_number: int
    reason: str

    def to_json(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "document_id": self.document_id,
            "filename": self.filename,
            "page_number": self.page_number,
            "reason": self.reason,
        }


@dataclass
class IngestReport:
    patient_id: str
    pages_ingested: int = 0
    vectors_written: int = 0
    embeddings_reused: int = 0
    quarantined: list[QuarantineEntry] = field(default_factory=list)


def detect_media_type(filename: str, raw_bytes: bytes) -> MediaType:
    lower = filename.lower()
    if lower.endswith(".pdf") or raw_bytes.startswith(b"%PDF"):
        return MediaType.PDF
    if lower.endswith((".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".gif")):
        return MediaType.IMAGE
    if raw_bytes.startswith(b"\x89PNG") or raw_bytes.startswith(b"\xff\xd8\xff"):
        return MediaType.IMAGE
    if lower.endswith(".txt"):
        return MediaType.PLAIN_TEXT
    try:
        raw_bytes.decode("utf-8")
        return MediaType.PLAIN_TEXT
    except UnicodeDecodeError:
        raise IngestError(f"cannot determine media type of {filename!r}")


def _to_png(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def split_document(
    doc: SourceDocument,
    raw_bytes: bytes,
    pdf_dpi: int = DEFAULT_PDF_DPI,
    rasterizer: Optional[ExternalRasterizer] = None,
) -> list[RecordPage]:
    """Split a pdf/image document into ordered PNG RecordPages (1-based)."""
    if doc.media_type not in (MediaType.PDF, MediaType.IMAGE):
        raise IngestError(
            f"document {doc.filename!r}: split_document handles pdf or image, "
            f"got {doc.media_type.value}"
        )
    pages: list[RecordPage] = []
    if doc.media_type is MediaType.PDF:
        try:
            if rasterizer is not None:
                pdf_pages = rasterizer.rasterize(raw_bytes)
            else:
                pdf_pages = extract_pdf_pages(raw_bytes, fallback_dpi=pdf_dpi)
        except EncryptedPdfError:
            raise IngestError(f"document {doc.filename!r}: encrypted PDFs are unsupported")
        except PdfError as exc:
            raise IngestError(f"document {doc.filename!r}: {exc}")
        for pdf_page in pdf_pages:
            pages.append(
                RecordPage(
                    page_id=content_id(doc.document_id, str(pdf_page.page_number)),
                    document_id=doc.document_id,
                    page_number=pdf_page.page_number,
                    image_bytes=_to_png(pdf_page.image),
                    dpi=pdf_page.dpi,
                )
            )
    else:
        try:
            with Image.open(io.BytesIO(raw_bytes)) as img:
                dpi = round(img.info.get("dpi", (pdf_dpi, pdf_dpi))[0]) or pdf_dpi
                png = _to_png(img.copy())
        except (UnidentifiedImageError, OSError) as exc:
            raise IngestError(f"document {doc.filename!r}: corrupt image: {exc}")
        pages.append(
            RecordPage(
                page_id=content_id(doc.document_id, "1"),
                document_id=doc.document_id,
                page_number=1,
                image_bytes=png,
                dpi=max(36, dpi),
            )
        )
    return pages


def _split_text_document(doc: SourceDocument, raw_bytes: bytes, text_dpi: int) -> list[RecordPage]:
    try:
        text = raw_bytes.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"document {doc.filename!r}: not valid UTF-8 text: {exc}")
    try:
        page_images = render_text_note(text, dpi=text_dpi)
    except ValueError as exc:
        raise IngestError(f"document {doc.filename!r}: {exc}")
    return [
        RecordPage(
            page_id=content_id(doc.document_id, str(number)),
            document_id=doc.document_id,
            page_number=number,
            image_bytes=png,
            dpi=text_dpi,
        )
        for number, png in enumerate(page_images, start=1)
    ]


def ingest_patient(
    patient_id: str,
    documents: Sequence[tuple[str, bytes]],
    gateway: Gateway,
    store: VectorStore,
    policy: Optional[RedactionPolicy] = None,
    text_dpi: int = DEFAULT_TEXT_DPI,
    pdf_dpi: int = DEFAULT_PDF_DPI,
    rasterizer: Optional[ExternalRasterizer] = None,
) -> tuple[PatientRecord, IngestReport]:
    """Ingest a patient's uploaded files end to end.

    Splits every document into pages, applies the redaction policy, embeds
    each surviving page and upserts the vector under the patient namespace.
    Redaction and embedding failures quarantine the page and ingestion
    continues; if every page is quarantined the ingestion fails.
    """
    if not documents:
        raise IngestError("ingest requires at least one document")
    policy = policy or RedactionPolicy.passthrough()
    report = IngestReport(patient_id=patient_id)

    source_docs: list[SourceDocument] = []
    kept_pages: list[RecordPage] = []
    for filename, raw_bytes in documents:
        media_type = detect_media_type(filename, raw_bytes)
        document_id = content_id(patient_id, hashlib.sha256(raw_bytes).hexdigest())
        doc = SourceDocument(
            document_id=document_id,
            patient_id=patient_id,
            filename=filename,
            media_type=media_type,
        )
        if media_type is MediaType.PLAIN_TEXT:
            split_pages = _split_text_document(doc, raw_bytes, text_dpi)
        else:
            split_pages = split_document(doc, raw_bytes, pdf_dpi=pdf_dpi, rasterizer=rasterizer)
        doc = SourceDocument(
            document_id=document_id,
            patient_id=patient_id,
            filename=filename,
            media_type=media_type,
            page_count=len(split_pages),
        )
        source_docs.append(doc)

        for page in split_pages:
            try:
                kept_pages.append(redact_page(page, policy))
            except RedactionError as exc:
                report.quarantined.append(
                    QuarantineEntry(
                        patient_id=patient_id,
                        document_id=document_id,
                        filename=filename,
                        page_number=page.page_number,
                        reason=str(exc),
                    )
                )
                logger.warning(
                    "quarantined %s page %d of %s: %s",
                    patient_id,
                    page.page_number,
                    filename,
                    exc,
                )

    if not kept_pages:
        raise IngestError(f"patient {patient_id!r}: all pages quarantined or empty")

    # Embed only pages whose content is not already stored (idempotent re-ingest).
    to_embed: list[RecordPage] = []
    for page in kept_pages:
        page_hash = hashlib.sha256(page.image_bytes).hexdigest()
        existing = store.get(patient_id, page.page_id)
        if existing is not None and existing.content_hash == page_hash:
            report.embeddings_reused += 1
        else:
            to_embed.append(page)

    doc_by_id = {d.document_id: d for d in source_docs}
    embedded_pages = set()
    if to_embed:
        batch = gateway.embed_images(
            [p.image_bytes for p in to_embed], context=f"ingest:{patient_id}"
        )
        stored: list[StoredVector] = []
        for page, vector in zip(to_embed, batch.vectors):
            if vector is None:
                continue
            stored.append(
                StoredVector(
                    page_id=page.page_id,
                    patient_id=patient_id,
                    vector=vector,
                    content_hash=hashlib.sha256(page.image_bytes).hexdigest(),
                )
            )
            embedded_pages.add(page.page_id)
        for index, reason in batch.failures:
            page = to_embed[index]
            report.quarantined.append(
                QuarantineEntry(
                    patient_id=patient_id,
                    document_id=page.document_id,
                    filename=doc_by_id[page.document_id].filename,
                    page_number=page.page_number,
                    reason=reason,
                )
            )
        if stored:
            report.vectors_written = store.upsert(stored)

    quarantined_keys = {(q.document_id, q.page_number) for q in report.quarantined}
    final_pages = tuple(
        p for p in kept_pages if (p.document_id, p.page_number) not in quarantined_keys
    )
    if not final_pages:
        raise IngestError(f"patient {patient_id!r}: all pages quarantined")
    report.pages_ingested = len(final_pages)
    record = PatientRecord(
        patient_id=patient_id, documents=tuple(source_docs), pages=final_pages
    )
    return record, report
