from .ingest import (
    DEFAULT_PDF_DPI,
    DEFAULT_TEXT_DPI,
    IngestError,
    IngestReport,
    QuarantineEntry,
    detect_media_type,
    ingest_patient,
    split_document,
)
from .pdfpages import (
    EncryptedPdfError,
    ExternalRasterizer,
    PdfError,
    UnsupportedPdfError,
    extract_pdf_pages,
)
from .redact import (
    CallableRedactor,
    CommandRedactor,
    HttpRedactor,
    RedactionError,
    RedactionPolicy,
    redact_page,
)
from .textrender import paginate_text, render_text_note

__all__ = [
    "CallableRedactor",
    "CommandRedactor",
    "DEFAULT_PDF_DPI",
    "DEFAULT_TEXT_DPI",
    "EncryptedPdfError",
    "ExternalRasterizer",
    "HttpRedactor",
    "IngestError",
    "IngestReport",
    "PdfError",
    "QuarantineEntry",
    "RedactionError",
    "RedactionPolicy",
    "UnsupportedPdfError",
    "detect_media_type",
    "extract_pdf_pages",
    "ingest_patient",
    "paginate_text",
    "redact_page",
    "render_text_note",
    "split_document",
]
