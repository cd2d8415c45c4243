"""Single entry point: trial prep, patient ingest, match runs, eval, serve.

All subcommands are scriptable (flags/env/config only, no prompts) and print
a machine-readable JSON summary on stdout unless a text format is requested.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import click

from .core import (
    CriterionKind,
    GroundTruthLabel,
    RetrievalStrategy,
    Trial,
    ParseError,
    deserialize_record,
    read_records,
    validate_trial,
)
from .evaluation import (
    accuracy_by_group,
    classification_report,
    infer_ground_truth,
    profile_corpus,
    render_ablation,
    render_report,
    review_time_stats,
    strategy_ablation,
    subset_report,
)
from .gateway import GatewayConfig, GatewayError, build_gateway
from .ingest import ExternalRasterizer, IngestError, RedactionPolicy, ingest_patient
from .matching import MatchingError, assess_patient_trial
from .trialprep import TrialPrepError, prep_trial
from .workspace import Workspace, WorkspaceError

DEFAULT_CONFIG = """\
provider:
  mode: mock
  seed: 0
  embedding_dimension: 8
pricing:
  default:  {input_per_million: "2.5",  output_per_million: "10"}
  Assessor: {input_per_million: "15",   output_per_million: "60"}
  Embedder: {input_per_million: "0.12", output_per_million: "0"}
retry:
  max_validation_retries: 3
  max_transport_attempts: 3
  backoff_base: 0.5
concurrency:
  max_in_flight: 4
"""


def _workspace(ctx: click.Context) -> Workspace:
    return Workspace(Path(ctx.obj["workspace"]))


def _gateway(workspace: Workspace):
    if workspace.config_path.exists():
        config = GatewayConfig.load(workspace.config_path)
    else:
        config = GatewayConfig()
    return build_gateway(config, usage_log_path=workspace.usage_log_path)


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True, default=str))


def _fail(message: str) -> None:
    raise click.ClickException(message)


@click.group()
@click.option(
    "--workspace",
    "-w",
    envvar="TRIALMATCH_WORKSPACE",
    default="./workspace",
    show_default=True,
    help="Data directory holding trials, patients, store and results.",
)
@click.pass_context
def main(ctx: click.Context, workspace: str) -> None:
    """Patient-trial matching pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["workspace"] = workspace


@main.command()
@click.pass_context
def init(ctx: click.Context) -> None:
    """Write a default config.yaml into the workspace."""
    ws = _workspace(ctx)
    ws.root.mkdir(parents=True, exist_ok=True)
    if ws.config_path.exists():
        _fail(f"{ws.config_path} already exists")
    ws.config_path.write_text(DEFAULT_CONFIG, encoding="utf-8")
    _echo_json({"workspace": str(ws.root), "config": str(ws.config_path)})


# --- trial ---------------------------------------------------------------------


@main.group()
def trial() -> None:
    """Trial preprocessing."""


@trial.command("prep")
@click.argument("trial_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def trial_prep(ctx: click.Context, trial_file: str) -> None:
    """Split criteria, generate relevance criterion + guidelines, classify."""
    ws = _workspace(ctx)
    raw = Path(trial_file).read_text(encoding="utf-8").strip()
    try:
        record = json.loads(raw)
        if isinstance(record, dict) and "type" not in record:
            record["type"] = "Trial"
        trial_in: Trial = deserialize_record(json.dumps(record), "Trial")
    except (json.JSONDecodeError, ParseError) as exc:
        _fail(f"cannot parse trial file: {exc}")
    gateway = _gateway(ws)
    try:
        prepped = prep_trial(gateway, trial_in)
    except (TrialPrepError, GatewayError) as exc:
        _fail(str(exc))
    violations = validate_trial(prepped)
    if violations:
        _fail(f"prepped trial violates invariants: {violations}")
    path = ws.save_trial(prepped)
    _echo_json(
        {
            "trial_id": prepped.trial_id,
            "criteria": len(prepped.criteria),
            "inclusion": len(prepped.inclusion_criteria()),
            "exclusion": len(prepped.exclusion_criteria()),
            "relevance_criterion": prepped.relevance_criterion,
            "output": str(path),
        }
    )


# --- patient -------------------------------------------------------------------


@main.group()
def patient() -> None:
    """Patient ingestion."""


@patient.command("ingest")
@click.option("--patient", "patient_id", required=True, help="Patient identifier.")
@click.option("--text-dpi", default=72, show_default=True, type=int)
@click.option("--pdf-dpi", default=150, show_default=True, type=int)
@click.option(
    "--redactor",
    default="passthrough",
    show_default=True,
    help="passthrough, http(s)://endpoint, or command:<argv>.",
)
@click.option(
    "--rasterizer",
    default=None,
    help="External PDF rasterizer command template ({input} {outdir} {dpi}).",
)
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def patient_ingest(
    ctx: click.Context,
    patient_id: str,
    text_dpi: int,
    pdf_dpi: int,
    redactor: str,
    rasterizer: str,
    files: tuple[str, ...],
) -> None:
    """Split documents into pages, redact, embed, and store."""
    ws = _workspace(ctx)
    gateway = _gateway(ws)
    store = ws.load_store()
    try:
        policy = RedactionPolicy.from_spec(redactor)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    raster = ExternalRasterizer(rasterizer, dpi=pdf_dpi) if rasterizer else None
    documents = [(Path(f).name, Path(f).read_bytes()) for f in files]
    try:
        record, report = ingest_patient(
            patient_id,
            documents,
            gateway,
            store,
            policy=policy,
            text_dpi=text_dpi,
            pdf_dpi=pdf_dpi,
            rasterizer=raster,
        )
    except (IngestError, GatewayError) as exc:
        _fail(str(exc))
    ws.save_patient(record, report, redaction_mode=policy.mode)
    ws.save_store(store)
    _echo_json(
        {
            "patient_id": patient_id,
            "documents": len(record.documents),
            "pages": report.pages_ingested,
            "vectors_written": report.vectors_written,
            "embeddings_reused": report.embeddings_reused,
            "quarantined": len(report.quarantined),
        }
    )


# --- match ---------------------------------------------------------------------


@main.group()
def match() -> None:
    """Patient x trial matching."""


@match.command("run")
@click.option("--patient", "patient_id", required=True)
@click.option("--trial", "trial_id", required=True)
@click.option("--strategy", default="topk-guideline:3", show_default=True)
@click.option(
    "--as-of",
    "as_of",
    default=None,
    help="Assessment as-of date (YYYY-MM-DD); defaults to today.",
)
@click.pass_context
def match_run(
    ctx: click.Context, patient_id: str, trial_id: str, strategy: str, as_of: str
) -> None:
    """Run the relevance gate then per-criterion assessment."""
    ws = _workspace(ctx)
    try:
        parsed_strategy = RetrievalStrategy.parse(strategy)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        as_of_date = date.fromisoformat(as_of) if as_of else date.today()
    except ValueError as exc:
        raise click.UsageError(f"invalid --as-of: {exc}")
    gateway = _gateway(ws)
    try:
        record = ws.load_patient(patient_id)
        trial_obj = ws.load_trial(trial_id)
        store = ws.load_store()
        result = assess_patient_trial(
            gateway, store, record, trial_obj, parsed_strategy, as_of_date
        )
    except (WorkspaceError, MatchingError, GatewayError) as exc:
        _fail(str(exc))
    run_path = ws.save_match_result(
        patient_id, trial_id, result.relevance, result.assessments, parsed_strategy.spec()
    )
    failed = sum(1 for a in result.assessments if a.failed)
    _echo_json(
        {
            "patient_id": patient_id,
            "trial_id": trial_id,
            "strategy": parsed_strategy.spec(),
            "as_of": as_of_date.isoformat(),
            "relevant": result.relevance.relevant,
            "assessments": len(result.assessments),
            "failed": failed,
            "output": str(run_path),
        }
    )


# --- eval ----------------------------------------------------------------------


@main.group("eval")
def eval_group() -> None:
    """Evaluation reports."""


def _load_labels(path: str) -> dict:
    labels: dict = {}
    for record in read_records(path, "GroundTruthLabel"):
        labels[(record.patient_id, record.trial_id, record.criterion_id)] = record.label.value
    return labels


def _load_predictions(path: str) -> dict:
    predictions: dict = {}
    for record in read_records(path, "CriterionAssessment"):
        if record.failed:
            continue
        predictions[(record.patient_id, record.trial_id, record.criterion_id)] = (
            record.verdict.value
        )
    return predictions


def _criterion_index(ws: Workspace) -> dict:
    index = {}
    for trial_id in ws.list_trial_ids():
        for criterion in ws.load_trial(trial_id).criteria:
            index[criterion.criterion_id] = criterion
    return index


@eval_group.command("report")
@click.option("--labels", "labels_file", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_file", required=True, type=click.Path(exists=True))
@click.option(
    "--subset",
    default=None,
    help="inclusion | exclusion | domain=<value> | data_format=<value> | temporal=<value>",
)
@click.option("--classes", default="Met,Unknown,Unmet", show_default=True)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
)
@click.pass_context
def eval_report(
    ctx: click.Context,
    labels_file: str,
    predictions_file: str,
    subset: str,
    classes: str,
    output_format: str,
) -> None:
    """Criterion-level classification report (optionally on a subset)."""
    ws = _workspace(ctx)
    try:
        labels = _load_labels(labels_file)
        predictions = _load_predictions(predictions_file)
    except ParseError as exc:
        _fail(str(exc))
    class_set = [c.strip() for c in classes.split(",") if c.strip()]
    try:
        if subset is None:
            report = classification_report(labels, predictions, class_set)
        elif subset in ("inclusion", "exclusion"):
            index = _criterion_index(ws)
            kind = CriterionKind(subset)

            def selector(key) -> bool:
                criterion = index.get(key[2])
                return criterion is not None and criterion.kind is kind

            report = subset_report(labels, predictions, class_set, selector)
        elif "=" in subset:
            facet, _, value = subset.partition("=")
            index = _criterion_index(ws)

            def selector(key) -> bool:
                criterion = index.get(key[2])
                if criterion is None:
                    return False
                attr = {
                    "domain": criterion.domain,
                    "data_format": criterion.data_format,
                    "temporal": criterion.temporal_constraint,
                }.get(facet)
                return attr is not None and attr.value == value

            report = subset_report(labels, predictions, class_set, selector)
        else:
            raise click.UsageError(f"unknown --subset {subset!r}")
        if output_format == "json":
            _echo_json(report.to_dict())
        else:
            click.echo(render_report(report, title=f"Samples: {report.total}"))
    except ValueError as exc:
        _fail(str(exc))


@eval_group.command("by-domain")
@click.option("--labels", "labels_file", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_file", required=True, type=click.Path(exists=True))
@click.pass_context
def eval_by_domain(ctx: click.Context, labels_file: str, predictions_file: str) -> None:
    """Accuracy per criterion domain."""
    ws = _workspace(ctx)
    labels = _load_labels(labels_file)
    predictions = _load_predictions(predictions_file)
    index = _criterion_index(ws)

    def group_of(key):
        criterion = index.get(key[2])
        return criterion.domain.value if criterion and criterion.domain else None

    groups = accuracy_by_group(labels, predictions, group_of)
    _echo_json(
        {
            "domains": {
                name: {"accuracy": acc, "samples": n} for name, (acc, n) in groups.items()
            }
        }
    )


@eval_group.command("ablation")
@click.option(
    "--labels",
    "labels_file",
    default=None,
    type=click.Path(exists=True),
    help="GroundTruthLabel JSONL; defaults to labels inferred from feedback.",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
)
@click.pass_context
def eval_ablation(ctx: click.Context, labels_file: str, output_format: str) -> None:
    """Positive-class precision/recall vs average images used, per strategy."""
    ws = _workspace(ctx)
    assessments = ws.load_all_run_assessments()
    if labels_file:
        raw = _load_labels(labels_file)
    else:
        kinds = {cid: c.kind for cid, c in _criterion_index(ws).items()}
        current = []
        for patient_id, trial_id in ws.list_assessed_pairs():
            current.extend(ws.load_assessments(patient_id, trial_id))
        inferred = infer_ground_truth(current, ws.load_feedback(), kinds)
        raw = {
            (l.patient_id, l.trial_id, l.criterion_id): l.label.value for l in inferred
        }
    from .core import Verdict

    labels = {key: Verdict(value) for key, value in raw.items()}
    rows = strategy_ablation(assessments, labels)
    if output_format == "json":
        _echo_json({"rows": [row.to_dict() for row in rows]})
    else:
        click.echo(render_ablation(rows))


@eval_group.command("review-times")
@click.pass_context
def eval_review_times(ctx: click.Context) -> None:
    """Adjusted patient review durations from the feedback log."""
    ws = _workspace(ctx)
    stats = review_time_stats(ws.load_feedback())
    _echo_json(
        {
            "count": stats.count,
            "mean_seconds": stats.mean_seconds,
            "median_seconds": stats.median_seconds,
            "q1_seconds": stats.q1_seconds,
            "q3_seconds": stats.q3_seconds,
        }
    )


@eval_group.command("profile-corpus")
@click.option("--sample", "sample_size", default=None, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.pass_context
def eval_profile_corpus(ctx: click.Context, sample_size: int, seed: int) -> None:
    """Record-type and visual-element distribution over stored pages."""
    ws = _workspace(ctx)
    gateway = _gateway(ws)
    pages = []
    for patient_id in ws.list_patient_ids():
        record = ws.load_patient(patient_id)
        for page in record.pages:
            pages.append((page.document_id, page.image_bytes))
    if not pages:
        _fail("no ingested pages in workspace")
    try:
        profile = profile_corpus(gateway, pages, sample_size=sample_size, seed=seed)
    except (ValueError, GatewayError) as exc:
        _fail(str(exc))
    _echo_json(profile.to_dict())


# --- export / serve / store ------------------------------------------------------


@main.command("export-labels")
@click.option("--out", "out_file", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def export_labels(ctx: click.Context, out_file: str) -> None:
    """Infer ground-truth labels from feedback and write them as JSONL."""
    from .core import serialize_record

    ws = _workspace(ctx)
    kinds = {cid: c.kind for cid, c in _criterion_index(ws).items()}
    assessments = []
    for patient_id, trial_id in ws.list_assessed_pairs():
        assessments.extend(ws.load_assessments(patient_id, trial_id))
    labels = infer_ground_truth(assessments, ws.load_feedback(), kinds)
    lines = "".join(serialize_record(label) + "\n" for label in labels)
    if out_file:
        Path(out_file).write_text(lines, encoding="utf-8")
        _echo_json({"labels": len(labels), "output": out_file})
    else:
        click.echo(lines, nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@click.option("--token", envvar="TRIALMATCH_TOKEN", default=None)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int, token: str) -> None:
    """Start the review service."""
    import uvicorn

    from .service import create_app

    ws = _workspace(ctx)
    app = create_app(ws.root, token=token)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.group("store")
def store_group() -> None:
    """Vector store inspection."""


@store_group.command("stats")
@click.pass_context
def store_stats(ctx: click.Context) -> None:
    """Count, dimension and per-patient page counts."""
    ws = _workspace(ctx)
    try:
        store = ws.load_store()
    except Exception as exc:
        _fail(f"cannot load store: {exc}")
    _echo_json(store.stats())


if __name__ == "__main__":
    main()
