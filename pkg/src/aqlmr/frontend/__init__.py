"""Query frontend: lexing, parsing, and semantic analysis of aggregation queries."""

from .lexer import LexError, Token, tokenize
from .nodes import (
    CircularClause,
    GridClause,
    HierarchicalClause,
    QueryAst,
    Source,
    WindowClause,
    render,
)
from .parser import ParseError, parse
from .semantic import (
    GridParams,
    QueryObject,
    RingParams,
    SemanticError,
    SlidingParams,
    analyze,
    explain,
)

__all__ = [
    "LexError",
    "Token",
    "tokenize",
    "Source",
    "GridClause",
    "WindowClause",
    "HierarchicalClause",
    "CircularClause",
    "QueryAst",
    "render",
    "ParseError",
    "parse",
    "SemanticError",
    "GridParams",
    "SlidingParams",
    "RingParams",
    "QueryObject",
    "analyze",
    "explain",
]
