"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .corpus import DEFAULT_MAX_LEN, Document, LabelSpaces, load_corpus


def ensure_documents(X, *, max_len: int = DEFAULT_MAX_LEN) -> tuple[list[Document], LabelSpaces | None]:
    """Accept a list of Documents or a JSONL corpus path.

    Returns the documents and, when loaded from a path, the label spaces built
    from the file (None for in-memory input, where spaces come from elsewhere).
    """
    if isinstance(X, (str, Path)):
        documents, spaces, _ = load_corpus(X, max_len=max_len)
        return documents, spaces
    documents = list(X)
    for k, doc in enumerate(documents):
        if not isinstance(doc, Document):
            raise TypeError(
                f"X[{k}] is {type(doc).__name__}, expected eventenergy.Document "
                f"(or pass a JSONL corpus path)"
            )
    return documents, None


def check_nonempty(documents: Sequence[Document]) -> None:
    if not documents or all(not d.mentions for d in documents):
        raise ValueError("corpus has no mentions; nothing to fit or score")
