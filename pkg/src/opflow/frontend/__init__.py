"""PHP subset frontend: lexer, parser and lowering to oplines."""

from .lexer import LexError, Token, TokenKind, lex
from .lower import FileLowerer, LowerError
from .parser import ParseError, parse, parse_source


def compile_source(source, path: str):
    """Compile PHP source text to (main unit, function units, class metas)."""
    tree = parse_source(source)
    return FileLowerer(path).lower_file(tree)


def compile_file(path: str):
    with open(path, "rb") as fh:
        return compile_source(fh.read(), path)


__all__ = ["LexError", "ParseError", "LowerError", "Token", "TokenKind", "lex", "parse",
           "parse_source", "compile_source", "compile_file"]
