"""AST node types for the supported PHP subset.  Every node carries ``line``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Node:
    line: int


# ---------------------------------------------------------------- expressions

@dataclass
class Literal(Node):
    value: object


@dataclass
class Interp(Node):
    """Double-quoted string with interpolation: parts are str or Node."""
    parts: list


@dataclass
class Var(Node):
    name: str


@dataclass
class VarVar(Node):
    name_expr: Node


@dataclass
class ArrayItem(Node):
    key: Optional[Node]
    value: Node
    unpack: bool = False
    by_ref: bool = False


@dataclass
class ArrayLiteral(Node):
    items: list


@dataclass
class Index(Node):
    base: Node
    key: Node


@dataclass
class ArrayAppend(Node):
    """``$a[]`` as an assignment target."""
    base: Node


@dataclass
class Prop(Node):
    obj: Node
    name: object        # str or Node


@dataclass
class StaticProp(Node):
    cls: str
    name: str


@dataclass
class Arg(Node):
    value: Node
    unpack: bool = False


@dataclass
class Call(Node):
    name: str
    args: list


@dataclass
class DynCall(Node):
    callee: Node
    args: list


@dataclass
class MethodCall(Node):
    obj: Node
    name: object        # str or Node
    args: list


@dataclass
class StaticCall(Node):
    cls: object         # str or Node
    name: object
    args: list


@dataclass
class New(Node):
    cls: object         # str or Node
    args: list


@dataclass
class Assign(Node):
    target: Node
    value: Node


@dataclass
class CompoundAssign(Node):
    op: str             # binary operator, e.g. "." or "+"
    target: Node
    value: Node


@dataclass
class IncDec(Node):
    op: str             # "++" or "--"
    prefix: bool
    target: Node


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass
class Unary(Node):
    op: str             # "!", "-", "+", "~", "@"
    operand: Node


@dataclass
class Cast(Node):
    type: str
    operand: Node


@dataclass
class Ternary(Node):
    cond: Node
    then: Optional[Node]
    else_: Node


@dataclass
class Coalesce(Node):
    left: Node
    right: Node


@dataclass
class Isset(Node):
    targets: list


@dataclass
class Empty(Node):
    target: Node


@dataclass
class Exit(Node):
    value: Optional[Node]


@dataclass
class Print(Node):
    value: Node


@dataclass
class Include(Node):
    kind: str           # include, include_once, require, require_once
    path: Node


@dataclass
class Eval(Node):
    code: Node


@dataclass
class ConstRef(Node):
    name: str


@dataclass
class ClassConst(Node):
    cls: str
    name: str


@dataclass
class Unsupported(Node):
    construct: str


# ----------------------------------------------------------------- statements

@dataclass
class Block(Node):
    body: list


@dataclass
class Echo(Node):
    values: list


@dataclass
class InlineHtml(Node):
    text: str


@dataclass
class ExprStmt(Node):
    expr: Node


@dataclass
class If(Node):
    cond: Node
    then: list
    elifs: list         # list of (cond, body)
    else_: Optional[list]


@dataclass
class While(Node):
    cond: Node
    body: list


@dataclass
class DoWhile(Node):
    body: list
    cond: Node


@dataclass
class For(Node):
    init: list
    cond: list
    step: list
    body: list


@dataclass
class Foreach(Node):
    subject: Node
    key: Optional[Node]
    value: Node
    body: list
    by_ref: bool = False


@dataclass
class Case(Node):
    expr: Optional[Node]    # None for default
    body: list


@dataclass
class Switch(Node):
    subject: Node
    cases: list


@dataclass
class Break(Node):
    levels: int = 1


@dataclass
class Continue(Node):
    levels: int = 1


@dataclass
class Return(Node):
    value: Optional[Node]


@dataclass
class Param(Node):
    name: str
    default: Optional[Node] = None
    by_ref: bool = False
    variadic: bool = False


@dataclass
class FunctionDecl(Node):
    name: str
    params: list
    body: list
    by_ref: bool = False


@dataclass
class MethodDecl(Node):
    name: str
    params: list
    body: Optional[list]    # None for abstract methods
    is_static: bool = False


@dataclass
class PropDecl(Node):
    name: str
    default: Optional[Node]
    is_static: bool = False


@dataclass
class ClassDecl(Node):
    name: str
    parent: Optional[str]
    traits: list
    props: list
    methods: list
    consts: list = field(default_factory=list)   # list of (name, expr)
    is_trait: bool = False
    is_interface: bool = False


@dataclass
class Global(Node):
    names: list


@dataclass
class StaticVar(Node):
    vars: list          # list of (name, default expr or None)


@dataclass
class Unset(Node):
    targets: list


@dataclass
class ConstDecl(Node):
    items: list         # list of (name, expr)


@dataclass
class Nop(Node):
    pass


@dataclass
class UnsupportedStmt(Node):
    construct: str


@dataclass
class File(Node):
    body: list
