"""Chain documents (``.nhmc.json``) and their expression language."""

from .document import (ChainDocument, Rule, dobrushin_document, document_family, document_to_dict,
                       dump_document, instantiate, load_document, parse_document,
                       read_document_source, shipped_documents)
from .errors import KINDS, SpecError
from .expr import compile_expression, evaluate, parse_expression, to_source

__all__ = [
    "ChainDocument",
    "KINDS",
    "Rule",
    "SpecError",
    "compile_expression",
    "dobrushin_document",
    "document_family",
    "document_to_dict",
    "dump_document",
    "evaluate",
    "instantiate",
    "load_document",
    "parse_document",
    "parse_expression",
    "read_document_source",
    "shipped_documents",
    "to_source",
]
