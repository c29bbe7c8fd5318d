"""Recursive-descent parser producing ``opflow.frontend.ast`` trees."""

from __future__ import annotations

from . import ast as A
from .lexer import Token, TokenKind, lex


class ParseError(Exception):
    def __init__(self, line: int, expected, got: str = ""):
        if isinstance(expected, str):
            expected = [expected]
        self.line = line
        self.expected = sorted(set(expected))
        self.got = got
        super().__init__(f"line {line}: expected {' or '.join(self.expected)}, got {got or 'end of input'}")


# Binding powers for binary operators (higher binds tighter).  Assignment is
# parsed at the operand level; ternary is 5 and ``??`` is 6.
_BINARY = {
    "or": 1, "xor": 2, "and": 3,
    "||": 7, "&&": 8, "|": 9, "^": 10, "&": 11,
    "==": 12, "!=": 12, "===": 12, "!==": 12, "<>": 12, "<=>": 12,
    "<": 13, "<=": 13, ">": 13, ">=": 13,
    ".": 14, "<<": 15, ">>": 15, "+": 16, "-": 16,
    "*": 17, "/": 17, "%": 17, "instanceof": 18,
}
_WORD_OPS = {"or", "xor", "and", "instanceof"}
_ASSIGN_OPS = {"=": None, ".=": ".", "+=": "+", "-=": "-", "*=": "*", "/=": "/",
               "%=": "%", "**=": "**", "??=": "??", "|=": "|", "&=": "&", "^=": "^",
               "<<=": "<<", ">>=": ">>"}
_TERNARY, _COALESCE, _ASSIGN_RHS = 5, 6, 5

_INCLUDES = {"include", "include_once", "require", "require_once"}
_MODIFIERS = {"public", "protected", "private", "static", "abstract", "final", "var", "readonly"}
_MAGIC = {"__line__", "__file__", "__dir__", "__function__", "__class__", "__method__"}


def _is_lvalue(e) -> bool:
    return isinstance(e, (A.Var, A.VarVar, A.Index, A.ArrayAppend, A.Prop, A.StaticProp))


class Parser:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.i = 0

    # ------------------------------------------------------------ utilities
    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def line(self):
        t = self.peek()
        if t is not None:
            return t.line
        return self.toks[-1].line if self.toks else 1

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError(self.line(), "token")
        self.i += 1
        return t

    def fail(self, expected):
        t = self.peek()
        raise ParseError(self.line(), expected, t.lexeme if t else "")

    def at_op(self, *ops) -> bool:
        t = self.peek()
        return t is not None and t.is_op(*ops)

    def at_kw(self, *words) -> bool:
        t = self.peek()
        return t is not None and t.is_kw(*words)

    def accept_op(self, op) -> bool:
        if self.at_op(op):
            self.i += 1
            return True
        return False

    def expect_op(self, op) -> Token:
        if not self.at_op(op):
            self.fail(f"'{op}'")
        return self.next()

    def expect_kw(self, word) -> Token:
        if not self.at_kw(word):
            self.fail(f"'{word}'")
        return self.next()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t is None or t.kind is not TokenKind.IDENT:
            self.fail("identifier")
        return self.next()

    def end_stmt(self):
        t = self.peek()
        if t is None:
            return
        if t.is_op(";"):
            self.i += 1
        elif t.kind is TokenKind.CLOSE_TAG:
            self.i += 1
        else:
            self.fail("';'")

    # ------------------------------------------------------------ statements
    def parse_file(self) -> A.File:
        body = []
        while self.peek() is not None:
            stmt = self.statement()
            if stmt is not None:
                body.append(stmt)
        return A.File(1, body)

    def block_or_stmt(self) -> list:
        if self.at_op("{"):
            self.next()
            return self.stmts_until("}")
        s = self.statement()
        return [s] if s is not None else []

    def stmts_until(self, *closers, kw=False) -> list:
        body = []
        while True:
            t = self.peek()
            if t is None:
                self.fail([f"'{c}'" for c in closers])
            if (kw and t.is_kw(*closers)) or (not kw and t.is_op(*closers)):
                if not kw:
                    self.next()
                return body
            s = self.statement()
            if s is not None:
                body.append(s)

    def alt_body(self, *enders) -> list:
        """Body of alternative syntax (``if (...): ... endif;``)."""
        return self.stmts_until(*enders, kw=True)

    def statement(self):
        t = self.peek()
        line = t.line
        k = t.kind
        if k is TokenKind.OPEN_TAG:
            self.next()
            return None
        if k is TokenKind.CLOSE_TAG:
            self.next()
            return None
        if k is TokenKind.OPEN_TAG_ECHO:
            self.next()
            values = [self.expr()]
            while self.accept_op(","):
                values.append(self.expr())
            self.end_stmt()
            return A.Echo(line, values)
        if k is TokenKind.INLINE_HTML:
            self.next()
            return A.InlineHtml(line, t.value)
        if t.is_op("{"):
            self.next()
            return A.Block(line, self.stmts_until("}"))
        if t.is_op(";"):
            self.next()
            return A.Nop(line)
        if k is TokenKind.IDENT:
            word = t.value.lower()
            handler = getattr(self, f"stmt_{word}", None)
            if handler is not None:
                return handler()
        e = self.expr()
        self.end_stmt()
        return A.ExprStmt(line, e)

    def paren_expr(self):
        self.expect_op("(")
        e = self.expr()
        self.expect_op(")")
        return e

    def stmt_if(self):
        line = self.next().line
        cond = self.paren_expr()
        if self.accept_op(":"):
            then = self.alt_body("elseif", "else", "endif")
            elifs, else_ = [], None
            while self.at_kw("elseif"):
                self.next()
                c = self.paren_expr()
                self.expect_op(":")
                elifs.append((c, self.alt_body("elseif", "else", "endif")))
            if self.at_kw("else"):
                self.next()
                self.expect_op(":")
                else_ = self.alt_body("endif")
            self.expect_kw("endif")
            self.end_stmt()
            return A.If(line, cond, then, elifs, else_)
        then = self.block_or_stmt()
        elifs, else_ = [], None
        while True:
            if self.at_kw("elseif"):
                self.next()
                c = self.paren_expr()
                elifs.append((c, self.block_or_stmt()))
            elif self.at_kw("else") and self.peek(1) is not None and self.peek(1).is_kw("if"):
                self.next()
                self.next()
                c = self.paren_expr()
                elifs.append((c, self.block_or_stmt()))
            elif self.at_kw("else"):
                self.next()
                else_ = self.block_or_stmt()
                break
            else:
                break
        return A.If(line, cond, then, elifs, else_)

    def stmt_while(self):
        line = self.next().line
        cond = self.paren_expr()
        if self.accept_op(":"):
            body = self.alt_body("endwhile")
            self.next()
            self.end_stmt()
        else:
            body = self.block_or_stmt()
        return A.While(line, cond, body)

    def stmt_do(self):
        line = self.next().line
        body = self.block_or_stmt()
        self.expect_kw("while")
        cond = self.paren_expr()
        self.end_stmt()
        return A.DoWhile(line, body, cond)

    def expr_list(self, closer):
        items = []
        if self.at_op(closer):
            return items
        items.append(self.expr())
        while self.accept_op(","):
            items.append(self.expr())
        return items

    def stmt_for(self):
        line = self.next().line
        self.expect_op("(")
        init = self.expr_list(";")
        self.expect_op(";")
        cond = self.expr_list(";")
        self.expect_op(";")
        step = self.expr_list(")")
        self.expect_op(")")
        if self.accept_op(":"):
            body = self.alt_body("endfor")
            self.next()
            self.end_stmt()
        else:
            body = self.block_or_stmt()
        return A.For(line, init, cond, step, body)

    def stmt_foreach(self):
        line = self.next().line
        self.expect_op("(")
        subject = self.expr()
        self.expect_kw("as")
        key, by_ref = None, False
        if self.accept_op("&"):
            by_ref = True
        value = self.postfix_operand()
        if self.accept_op("=>"):
            key = value
            if self.accept_op("&"):
                by_ref = True
            value = self.postfix_operand()
        self.expect_op(")")
        if self.accept_op(":"):
            body = self.alt_body("endforeach")
            self.next()
            self.end_stmt()
        else:
            body = self.block_or_stmt()
        return A.Foreach(line, subject, key, value, body, by_ref)

    def stmt_switch(self):
        line = self.next().line
        subject = self.paren_expr()
        alt = False
        if self.accept_op(":"):
            alt = True
        else:
            self.expect_op("{")
        cases = []
        while True:
            t = self.peek()
            if t is None:
                self.fail("'}'")
            if (not alt and t.is_op("}")) or (alt and t.is_kw("endswitch")):
                self.next()
                if alt:
                    self.end_stmt()
                break
            cline = t.line
            if t.is_kw("case"):
                self.next()
                cexpr = self.expr()
            elif t.is_kw("default"):
                self.next()
                cexpr = None
            else:
                self.fail(["'case'", "'default'"])
            if not self.accept_op(":"):
                self.expect_op(";")
            body = []
            while True:
                u = self.peek()
                if u is None or u.is_kw("case", "default", "endswitch") or u.is_op("}"):
                    break
                s = self.statement()
                if s is not None:
                    body.append(s)
            cases.append(A.Case(cline, cexpr, body))
        return A.Switch(line, subject, cases)

    def _levels(self):
        t = self.peek()
        if t is not None and t.kind is TokenKind.INT:
            self.next()
            return t.value
        return 1

    def stmt_break(self):
        line = self.next().line
        n = self._levels()
        self.end_stmt()
        return A.Break(line, n)

    def stmt_continue(self):
        line = self.next().line
        n = self._levels()
        self.end_stmt()
        return A.Continue(line, n)

    def stmt_return(self):
        line = self.next().line
        t = self.peek()
        value = None
        if t is not None and not t.is_op(";") and t.kind is not TokenKind.CLOSE_TAG:
            value = self.expr()
        self.end_stmt()
        return A.Return(line, value)

    def stmt_echo(self):
        line = self.next().line
        values = [self.expr()]
        while self.accept_op(","):
            values.append(self.expr())
        self.end_stmt()
        return A.Echo(line, values)

    def stmt_global(self):
        line = self.next().line
        names = []
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.VARIABLE:
                self.fail("variable")
            names.append(self.next().value)
            if not self.accept_op(","):
                break
        self.end_stmt()
        return A.Global(line, names)

    def stmt_static(self):
        if self.peek(1) is None or self.peek(1).kind is not TokenKind.VARIABLE:
            line = self.line()
            e = self.expr()
            self.end_stmt()
            return A.ExprStmt(line, e)
        line = self.next().line
        items = []
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.VARIABLE:
                self.fail("variable")
            name = self.next().value
            default = self.expr() if self.accept_op("=") else None
            items.append((name, default))
            if not self.accept_op(","):
                break
        self.end_stmt()
        return A.StaticVar(line, items)

    def stmt_unset(self):
        line = self.next().line
        self.expect_op("(")
        targets = self.expr_list(")")
        self.accept_op(",")
        self.expect_op(")")
        self.end_stmt()
        return A.Unset(line, targets)

    def stmt_const(self):
        line = self.next().line
        items = []
        while True:
            name = self.expect_ident().value
            self.expect_op("=")
            items.append((name, self.expr()))
            if not self.accept_op(","):
                break
        self.end_stmt()
        return A.ConstDecl(line, items)

    def stmt_declare(self):
        line = self.next().line
        self.expect_op("(")
        depth = 1
        while depth:
            t = self.next()
            if t.is_op("("):
                depth += 1
            elif t.is_op(")"):
                depth -= 1
        self.end_stmt()
        return A.Nop(line)

    def stmt_throw(self):
        line = self.next().line
        self.expr()
        self.end_stmt()
        return A.ExprStmt(line, A.Exit(line, None))

    def _unsupported_stmt(self, word):
        line = self.next().line
        return A.UnsupportedStmt(line, word)

    def stmt_try(self):
        return self._unsupported_stmt("try/catch")

    def stmt_goto(self):
        return self._unsupported_stmt("goto")

    def stmt_namespace(self):
        return self._unsupported_stmt("namespace")

    def stmt_use(self):
        return self._unsupported_stmt("use (namespace import)")

    def skip_type(self):
        """Skip an optional type declaration (``?int``, ``A|B``, ``array``)."""
        while True:
            t = self.peek()
            if t is None:
                return
            if t.is_op("?", "|", "\\") or (t.kind is TokenKind.IDENT and not t.is_kw(*_MODIFIERS)):
                self.next()
                continue
            return

    def params(self) -> list:
        self.expect_op("(")
        out = []
        while not self.at_op(")"):
            line = self.line()
            if self.at_kw(*_MODIFIERS):
                raise ParseError(line, "parameter", "constructor property promotion")
            self.skip_type()
            by_ref = self.accept_op("&")
            variadic = self.accept_op("...")
            t = self.peek()
            if t is None or t.kind is not TokenKind.VARIABLE:
                self.fail("parameter variable")
            name = self.next().value
            default = self.expr() if self.accept_op("=") else None
            out.append(A.Param(line, name, default, by_ref, variadic))
            if not self.accept_op(","):
                break
        self.expect_op(")")
        if self.accept_op(":"):
            self.skip_type()
        return out

    def stmt_function(self):
        t = self.peek(1)
        if t is not None and (t.is_op("(") or (t.is_op("&") and self.peek(2) is not None
                                                and self.peek(2).is_op("("))):
            line = self.line()
            e = self.expr()
            self.end_stmt()
            return A.ExprStmt(line, e)
        line = self.next().line
        by_ref = self.accept_op("&")
        name = self.expect_ident().value
        params = self.params()
        self.expect_op("{")
        body = self.stmts_until("}")
        return A.FunctionDecl(line, name, params, body, by_ref)

    def stmt_abstract(self):
        self.next()
        return self.statement()

    stmt_final = stmt_abstract
    stmt_readonly = stmt_abstract

    def stmt_class(self):
        return self.class_decl(is_trait=False, is_interface=False)

    def stmt_trait(self):
        return self.class_decl(is_trait=True, is_interface=False)

    def stmt_interface(self):
        return self.class_decl(is_trait=False, is_interface=True)

    def class_decl(self, is_trait, is_interface):
        line = self.next().line
        name = self.expect_ident().value
        parent = None
        if self.at_kw("extends"):
            self.next()
            self.accept_op("\\")
            parent = self.expect_ident().value
            while self.accept_op(","):      # interfaces may extend several
                self.expect_ident()
        if self.at_kw("implements"):
            self.next()
            while True:
                self.accept_op("\\")
                self.expect_ident()
                if not self.accept_op(","):
                    break
        self.expect_op("{")
        decl = A.ClassDecl(line, name, parent, [], [], [], [], is_trait, is_interface)
        while not self.accept_op("}"):
            self.class_member(decl)
        if is_interface:
            decl.parent = None
        return decl

    def class_member(self, decl):
        line = self.line()
        if self.at_kw("use"):
            self.next()
            while True:
                self.accept_op("\\")
                decl.traits.append(self.expect_ident().value)
                if not self.accept_op(","):
                    break
            if self.at_op("{"):
                raise ParseError(line, "';'", "trait adaptation block")
            self.end_stmt()
            return
        mods = set()
        while self.at_kw(*_MODIFIERS):
            mods.add(self.next().value.lower())
        if self.at_kw("const"):
            self.next()
            while True:
                t = self.expect_ident()
                if not self.at_op("="):
                    t = self.expect_ident()   # typed constant
                self.expect_op("=")
                decl.consts.append((t.value, self.expr()))
                if not self.accept_op(","):
                    break
            self.end_stmt()
            return
        if self.at_kw("function"):
            self.next()
            self.accept_op("&")
            name = self.expect_ident().value
            params = self.params()
            body = None
            if self.accept_op("{"):
                body = self.stmts_until("}")
            else:
                self.end_stmt()
            decl.methods.append(A.MethodDecl(line, name, params, body, "static" in mods))
            return
        self.skip_type()
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.VARIABLE:
                self.fail(["property", "method", "'}'"])
            name = self.next().value
            default = self.expr() if self.accept_op("=") else None
            decl.props.append(A.PropDecl(line, name, default, "static" in mods))
            if not self.accept_op(","):
                break
        self.end_stmt()

    # ------------------------------------------------------------ expressions
    def expr(self, min_prec: int = 0):
        left = self.unary()
        while True:
            t = self.peek()
            if t is None:
                return left
            if t.is_op("?") and min_prec <= _TERNARY:
                self.next()
                if self.accept_op(":"):
                    then = None
                else:
                    then = self.expr()
                    self.expect_op(":")
                else_ = self.expr(_TERNARY + 1)
                left = A.Ternary(t.line, left, then, else_)
                continue
            if t.is_op("??") and min_prec <= _COALESCE:
                self.next()
                right = self.expr(_COALESCE)
                left = A.Coalesce(t.line, left, right)
                continue
            op = None
            if t.kind is TokenKind.OP and t.value in _BINARY:
                op = t.value
            elif t.kind is TokenKind.IDENT and t.value.lower() in _WORD_OPS:
                op = t.value.lower()
            if op is None:
                return left
            prec = _BINARY[op]
            if prec < min_prec:
                return left
            self.next()
            if op == "instanceof":
                self.accept_op("\\")
                rt = self.peek()
                if rt is not None and rt.kind is TokenKind.IDENT:
                    right = A.Literal(rt.line, self.next().value)
                else:
                    right = self.unary()
                left = A.Binary(t.line, op, left, right)
                continue
            right = self.expr(prec + 1)
            if op == "<>":
                op = "!="
            left = A.Binary(t.line, op, left, right)

    def unary(self):
        t = self.peek()
        if t is None:
            self.fail("expression")
        line = t.line
        if t.is_op("!"):
            self.next()
            return A.Unary(line, "!", self.unary())
        if t.is_op("-", "+", "~"):
            self.next()
            return A.Unary(line, t.value, self.unary())
        if t.is_op("@"):
            self.next()
            return self.unary()
        if t.kind is TokenKind.CAST:
            self.next()
            return A.Cast(line, t.value, self.unary())
        if t.is_op("++", "--"):
            self.next()
            target = self.postfix_operand()
            return A.IncDec(line, t.value, True, target)
        if t.is_op("&"):
            self.fail("expression")
        if t.kind is TokenKind.IDENT:
            word = t.value.lower()
            if word == "print":
                self.next()
                return A.Print(line, self.expr(_ASSIGN_RHS))
            if word in _INCLUDES:
                self.next()
                return A.Include(line, word, self.expr(_ASSIGN_RHS))
            if word == "clone":
                self.next()
                self.unary()
                return A.Unsupported(line, "clone")
            if word == "throw":
                self.next()
                self.expr()
                return A.Exit(line, None)
        e = self.postfix_operand()
        t = self.peek()
        if t is not None and t.kind is TokenKind.OP and t.value in _ASSIGN_OPS and _is_lvalue(e):
            self.next()
            if t.value == "=" and self.at_op("&"):
                self.next()
                self.expr(_ASSIGN_RHS)
                return A.Unsupported(line, "assignment by reference")
            value = self.expr(_ASSIGN_RHS)
            if t.value == "=":
                return A.Assign(t.line, e, value)
            if t.value == "??=":
                return A.Assign(t.line, e, A.Coalesce(t.line, e, value))
            return A.CompoundAssign(t.line, _ASSIGN_OPS[t.value], e, value)
        if t is not None and t.is_op("++", "--") and _is_lvalue(e):
            self.next()
            return A.IncDec(t.line, t.value, False, e)
        if t is not None and t.is_op("**"):
            self.next()
            return A.Binary(t.line, "**", e, self.unary())
        return e

    def postfix_operand(self):
        return self.postfix(self.primary())

    def args(self) -> list:
        self.expect_op("(")
        out = []
        while not self.at_op(")"):
            line = self.line()
            if self.at_op("..."):
                self.next()
                if self.at_op(")"):
                    out.append(A.Arg(line, A.Unsupported(line, "first-class callable"), False))
                    break
                out.append(A.Arg(line, self.expr(), True))
            else:
                t, u = self.peek(), self.peek(1)
                if t.kind is TokenKind.IDENT and u is not None and u.is_op(":") and not u.is_op("::"):
                    raise ParseError(line, "argument", "named argument")
                out.append(A.Arg(line, self.expr(), False))
            if not self.accept_op(","):
                break
        self.expect_op(")")
        return out

    def member_name(self):
        t = self.peek()
        if t is None:
            self.fail("member name")
        if t.kind is TokenKind.IDENT:
            return self.next().value
        if t.kind is TokenKind.VARIABLE:
            self.next()
            return A.Var(t.line, t.value)
        if t.is_op("{"):
            self.next()
            e = self.expr()
            self.expect_op("}")
            return e
        self.fail("member name")

    def postfix(self, e):
        while True:
            t = self.peek()
            if t is None:
                return e
            if t.is_op("["):
                self.next()
                if self.accept_op("]"):
                    e = A.ArrayAppend(t.line, e)
                    continue
                key = self.expr()
                self.expect_op("]")
                e = A.Index(t.line, e, key)
            elif t.is_op("->", "?->"):
                self.next()
                name = self.member_name()
                if self.at_op("("):
                    e = A.MethodCall(t.line, e, name, self.args())
                else:
                    e = A.Prop(t.line, e, name)
            elif t.is_op("::"):
                self.next()
                e = self.static_member(t.line, e)
            elif t.is_op("("):
                e = A.DynCall(t.line, e, self.args())
            else:
                return e

    def static_member(self, line, cls):
        t = self.peek()
        if t is None:
            self.fail("static member")
        if t.kind is TokenKind.VARIABLE:
            self.next()
            if self.at_op("("):
                return A.StaticCall(line, cls, A.Var(t.line, t.value), self.args())
            if isinstance(cls, str):
                return A.StaticProp(line, cls, t.value)
            return A.Unsupported(line, "dynamic static property")
        if t.kind is TokenKind.IDENT:
            self.next()
            if self.at_op("("):
                return A.StaticCall(line, cls, t.value, self.args())
            if t.value.lower() == "class" and isinstance(cls, str):
                return A.Literal(line, cls)
            if isinstance(cls, str):
                return A.ClassConst(line, cls, t.value)
            return A.Unsupported(line, "dynamic class constant")
        self.fail("static member")

    def array_items(self, closer) -> list:
        items = []
        while not self.at_op(closer):
            line = self.line()
            if self.accept_op(","):
                raise ParseError(line, "array element", "','")
            if self.accept_op("..."):
                items.append(A.ArrayItem(line, None, self.expr(), unpack=True))
            else:
                by_ref = self.accept_op("&")
                v = self.expr()
                if self.accept_op("=>"):
                    by_ref = self.accept_op("&")
                    items.append(A.ArrayItem(line, v, self.expr(), by_ref=by_ref))
                else:
                    items.append(A.ArrayItem(line, None, v, by_ref=by_ref))
            if not self.accept_op(","):
                break
        self.expect_op(closer)
        return items

    def primary(self):
        t = self.peek()
        if t is None:
            self.fail("expression")
        line = t.line
        k = t.kind
        if k is TokenKind.VARIABLE:
            self.next()
            return A.Var(line, t.value)
        if k in (TokenKind.INT, TokenKind.FLOAT, TokenKind.STRING):
            self.next()
            return A.Literal(line, t.value)
        if k is TokenKind.TEMPLATE:
            self.next()
            parts = []
            for p in t.parts:
                if isinstance(p, str):
                    parts.append(p)
                else:
                    sub = Parser(p)
                    e = sub.expr()
                    if sub.peek() is not None:
                        sub.fail("end of interpolation")
                    parts.append(e)
            return A.Interp(line, parts)
        if t.is_op("$"):
            self.next()
            if self.accept_op("{"):
                e = self.expr()
                self.expect_op("}")
                return A.VarVar(line, e)
            inner = self.primary()
            if not isinstance(inner, (A.Var, A.VarVar)):
                raise ParseError(line, "variable")
            return A.VarVar(line, inner)
        if t.is_op("("):
            self.next()
            e = self.expr()
            self.expect_op(")")
            return e
        if t.is_op("["):
            self.next()
            return A.ArrayLiteral(line, self.array_items("]"))
        if t.is_op("\\"):
            self.next()
            t = self.peek()
            if t is None or t.kind is not TokenKind.IDENT:
                self.fail("name")
        if t.kind is TokenKind.IDENT:
            return self.name_expr()
        self.fail("expression")

    def name_expr(self):
        t = self.next()
        line, name, word = t.line, t.value, t.value.lower()
        if word == "true":
            return A.Literal(line, True)
        if word == "false":
            return A.Literal(line, False)
        if word == "null":
            return A.Literal(line, None)
        if word in _MAGIC:
            return A.ConstRef(line, name.upper())
        if word == "array" and self.at_op("("):
            self.next()
            return A.ArrayLiteral(line, self.array_items(")"))
        if word == "list" and self.at_op("("):
            self.args()
            return A.Unsupported(line, "list()")
        if word == "isset":
            self.expect_op("(")
            targets = self.expr_list(")")
            self.accept_op(",")
            self.expect_op(")")
            return A.Isset(line, targets)
        if word == "empty":
            return A.Empty(line, self.paren_expr())
        if word in ("exit", "die"):
            value = None
            if self.accept_op("("):
                if not self.at_op(")"):
                    value = self.expr()
                self.expect_op(")")
            return A.Exit(line, value)
        if word == "eval":
            return A.Eval(line, self.paren_expr())
        if word == "new":
            return self.new_expr(line)
        if word in ("function", "fn"):
            return A.Unsupported(line, "closure")
        if word == "match":
            return A.Unsupported(line, "match expression")
        if word == "yield":
            return A.Unsupported(line, "generator")
        if self.at_op("("):
            return A.Call(line, name, self.args())
        if self.at_op("::"):
            self.next()
            return self.static_member(line, name)
        return A.ConstRef(line, name)

    def new_expr(self, line):
        t = self.peek()
        if t is None:
            self.fail("class name")
        if t.is_op("\\"):
            self.next()
            t = self.peek()
        if t.kind is TokenKind.IDENT:
            if t.is_kw("class"):
                return A.Unsupported(line, "anonymous class")
            cls = self.next().value
        elif t.kind is TokenKind.VARIABLE:
            self.next()
            cls = A.Var(t.line, t.value)
            while self.at_op("->", "[", "::"):
                u = self.next()
                if u.is_op("["):
                    k = self.expr()
                    self.expect_op("]")
                    cls = A.Index(u.line, cls, k)
                elif u.is_op("->"):
                    cls = A.Prop(u.line, cls, self.member_name())
                else:
                    cls = A.StaticProp(u.line, cls, self.next().value)
        elif t.is_op("("):
            cls = self.paren_expr()
        else:
            self.fail("class name")
        args = self.args() if self.at_op("(") else []
        return A.New(line, cls, args)


def parse(tokens: list) -> A.File:
    return Parser(tokens).parse_file()


def parse_source(source) -> A.File:
    return parse(lex(source))
