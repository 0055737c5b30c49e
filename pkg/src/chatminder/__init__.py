"""chatminder: mine chat exports for upcoming events; remind until acknowledged."""

from .entities import EventCandidate, extract_message, message_to_events
from .ingest import ChatMessage, ingest_new, parse_jsonl_messages, parse_whatsapp_export
from .knn import (
    FeatureVector,
    KnnModel,
    PriorityLevel,
    UserPreferences,
    classify,
    evaluate_split,
    featurize,
)
from .notify import NotifierService, Notification, open_service, plan_notifications
from .store import EventStore, replay
from .temporal import resolve_date, resolve_datetime, scan_temporal
from .textpipe import clean_text, lemmatize, process_text, segment_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "ChatMessage",
    "EventCandidate",
    "EventStore",
    "FeatureVector",
    "KnnModel",
    "Notification",
    "NotifierService",
    "PriorityLevel",
    "UserPreferences",
    "classify",
    "clean_text",
    "evaluate_split",
    "extract_message",
    "featurize",
    "ingest_new",
    "lemmatize",
    "message_to_events",
    "open_service",
    "parse_jsonl_messages",
    "parse_whatsapp_export",
    "plan_notifications",
    "process_text",
    "replay",
    "resolve_date",
    "resolve_datetime",
    "scan_temporal",
    "segment_sentences",
    "tokenize",
]
