"""Java source scanning: identifiers used as API-usage evidence.

This is not a full Java parser. It tokenizes a compilation unit (comments,
string/char/text-block literals and operators handled properly) and walks the
token stream with brace-depth scope tracking to collect:

  a. simple names of imported types (wildcard and static imports excluded),
  b. types named in object-creation expressions,
  c. declared types of fields, local variables and parameters,
  d. invoked method names, with a receiver-type hint when the receiver is a
     variable whose declared type is visible in the file (or a capitalized
     identifier, i.e. a static call through the type name).

Fields are pre-scanned per type body so a method may use a field declared
below it. Anything structurally broken (unterminated comment or literal,
unbalanced braces) raises :class:`JavaParseError`; batch callers record the
file as skipped instead of aborting.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

PRIMITIVES = frozenset("boolean byte char double float int long short void".split())

MODIFIERS = frozenset(
    "public private protected static final abstract synchronized native strictfp transient volatile default".split()
)

TYPE_DECL_KEYWORDS = frozenset(["class", "interface", "enum"])

# multi-character operators lexed as single tokens so `a < b && c > d` never
# looks like a generic type argument list
_MULTI_OPS = [
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "==", "!=", "<=", ">=",
    "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>",
]


class JavaParseError(Exception):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | string | char | punct
    text: str
    line: int


@dataclass
class ApiUsage:
    """Raw (unsplit) identifier spellings with occurrence counts."""

    classes: Counter = field(default_factory=Counter)
    methods: Counter = field(default_factory=Counter)  # (name, receiver type hint or None)
    decode_replaced: bool = False

    def distinct_classes(self) -> list[str]:
        return sorted(self.classes)

    def distinct_methods(self) -> list[tuple[str, Optional[str]]]:
        return sorted(self.methods, key=lambda m: (m[0], m[1] or ""))


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, n, line = 0, len(source), 1
    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c in " \t\r\f":
            i += 1
            continue
        if c == "/" and i + 1 < n:
            if source[i + 1] == "/":
                j = source.find("\n", i)
                i = n if j == -1 else j
                continue
            if source[i + 1] == "*":
                j = source.find("*/", i + 2)
                if j == -1:
                    raise JavaParseError(f"unterminated block comment at line {line}")
                line += source.count("\n", i, j)
                i = j + 2
                continue
        if source.startswith('"""', i):
            j = source.find('"""', i + 3)
            if j == -1:
                raise JavaParseError(f"unterminated text block at line {line}")
            tokens.append(Token("string", source[i : j + 3], line))
            line += source.count("\n", i, j)
            i = j + 3
            continue
        if c == '"' or c == "'":
            j = i + 1
            terminated = False
            while j < n:
                if source[j] == "\\":
                    j += 2
                    continue
                if source[j] == c:
                    terminated = True
                    break
                if source[j] == "\n":
                    break
                j += 1
            if not terminated:
                raise JavaParseError(f"unterminated literal at line {line}")
            tokens.append(Token("string" if c == '"' else "char", source[i : j + 1], line))
            i = j + 1
            continue
        if c.isdigit():
            j = i + 1
            while j < n and (
                source[j].isalnum()
                or source[j] in "._"
                or (source[j] in "+-" and source[j - 1] in "eEpP")
            ):
                j += 1
            tokens.append(Token("number", source[i:j], line))
            i = j
            continue
        if c.isalpha() or c == "_" or c == "$":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "_$"):
                j += 1
            word = source[i:j]
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line))
            i = j
            continue
        matched = False
        for op in _MULTI_OPS:
            if source.startswith(op, i):
                tokens.append(Token("punct", op, line))
                i += len(op)
                matched = True
                break
        if not matched:
            tokens.append(Token("punct", c, line))
            i += 1
    return tokens


def _match_braces(tokens: list[Token]) -> dict[int, int]:
    pairs: dict[int, int] = {}
    stack: list[int] = []
    for i, t in enumerate(tokens):
        if t.text == "{":
            stack.append(i)
        elif t.text == "}":
            if not stack:
                raise JavaParseError(f"unbalanced braces at line {t.line}")
            pairs[stack.pop()] = i
    if stack:
        raise JavaParseError("unbalanced braces at end of file")
    return pairs


_TYPE_ARG_OK = frozenset([",", ".", "?", "[", "]", "<", ">", "&"])
_DECL_BOUNDARY = frozenset(["=", ",", ";", ")", ":"])


def _type_prefix(tok: Token) -> bool:
    """A token that can directly precede a method name in a declaration
    header (return type or its suffix), ruling the name out as a call site."""
    return (
        tok.kind == "ident"
        or (tok.kind == "keyword" and tok.text in PRIMITIVES)
        or tok.text in (">", "]")
    )


class _TypeReader:
    """Shared type-shaped token matching (no side effects)."""

    def __init__(self, tokens: list[Token]):
        self.toks = tokens

    def parse_type(self, i: int) -> Optional[tuple[str, int]]:
        """Try to read a (possibly qualified, generic, array, vararg) type at
        token index i. Returns (simple name, index after the type); the name
        is "" for primitives."""
        toks = self.toks
        if i >= len(toks):
            return None
        if toks[i].kind == "keyword" and toks[i].text in PRIMITIVES:
            simple = ""
            i += 1
        elif toks[i].kind == "ident":
            simple = toks[i].text
            i += 1
            while i + 1 < len(toks) and toks[i].text == "." and toks[i + 1].kind == "ident":
                simple = toks[i + 1].text
                i += 2
        else:
            return None
        if i < len(toks) and toks[i].text == "<":
            end = self.match_type_args(i)
            if end is None:
                return None
            i = end
        while i + 1 < len(toks) and toks[i].text == "[" and toks[i + 1].text == "]":
            i += 2
        if i < len(toks) and toks[i].text == "...":
            i += 1
        return simple, i

    def match_type_args(self, i: int) -> Optional[int]:
        """Index just past a balanced <...> whose contents look like type
        arguments; None when it is really a comparison expression."""
        depth = 0
        toks = self.toks
        while i < len(toks):
            t = toks[i]
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
                if depth == 0:
                    return i + 1
            elif t.text == ">>":
                depth -= 2
                if depth <= 0:
                    return i + 1
            elif t.kind == "ident" or (
                t.kind == "keyword" and (t.text in PRIMITIVES or t.text in ("extends", "super"))
            ):
                pass
            elif t.text in _TYPE_ARG_OK:
                pass
            else:
                return None
            i += 1
        return None

    def read_declarator(self, i: int) -> Optional[tuple[list[str], list[str], int]]:
        """Match `Type[|Type...] name [...] [;|)|:|, at close]` starting at i.
        Returns (type simple names, declared variable names, index of the
        terminating token) without recording anything."""
        toks = self.toks
        parsed = self.parse_type(i)
        if parsed is None:
            return None
        types = [parsed[0]]
        j = parsed[1]
        while j < len(toks) and toks[j].text == "|":  # union catch types
            nxt = self.parse_type(j + 1)
            if nxt is None:
                return None
            types.append(nxt[0])
            j = nxt[1]
        if j >= len(toks) or toks[j].kind != "ident":
            return None
        if j + 1 < len(toks) and toks[j + 1].text == "(":
            return None  # method declaration header
        if j + 1 < len(toks) and toks[j + 1].text not in _DECL_BOUNDARY:
            return None
        names = [toks[j].text]
        j += 1
        while j < len(toks):
            t = toks[j]
            if t.text == "=":
                j = self.skip_expression(j + 1)
                continue
            if t.text == ",":
                # `Type a, b;` continues this declaration; a parameter-list
                # comma (next element is another Type) terminates it
                if (
                    j + 2 < len(toks)
                    and toks[j + 1].kind == "ident"
                    and toks[j + 2].text in _DECL_BOUNDARY
                ):
                    names.append(toks[j + 1].text)
                    j += 2
                    continue
                return types, names, j
            if t.text in (";", ")", ":"):
                return types, names, j
            return None
        return None

    def skip_expression(self, i: int) -> int:
        """Index of the `,`, `;` or `)` terminating an initializer expression
        at nesting depth zero."""
        toks = self.toks
        depth = 0
        while i < len(toks):
            t = toks[i]
            if t.text in ("(", "[", "{"):
                depth += 1
            elif t.text in (")", "]", "}"):
                if depth == 0:
                    return i
                depth -= 1
            elif depth == 0 and t.text in (",", ";"):
                return i
            i += 1
        return i


def _prescan_fields(tokens: list[Token], pairs: dict[int, int]) -> dict[int, dict[str, Optional[str]]]:
    """Map each type-body `{` index to its field declarations (name -> type
    simple name), collected at the body's direct nesting level."""
    reader = _TypeReader(tokens)
    bodies: dict[int, dict[str, Optional[str]]] = {}
    for i, t in enumerate(tokens):
        if t.kind != "keyword" or t.text not in TYPE_DECL_KEYWORDS:
            continue
        if i > 0 and tokens[i - 1].text == ".":
            continue  # Foo.class and similar
        j = i + 1
        while j < len(tokens) and tokens[j].text not in ("{", ";"):
            if tokens[j].text == "<":
                end = reader.match_type_args(j)
                if end is None:
                    break
                j = end
                continue
            j += 1
        if j >= len(tokens) or tokens[j].text != "{":
            continue
        open_idx, close_idx = j, pairs[j]
        fields: dict[str, Optional[str]] = {}
        k = open_idx + 1
        depth = 0
        start_ok = True
        while k < close_idx:
            text = tokens[k].text
            if text == "{":
                depth += 1
            elif text == "}":
                depth -= 1
            if depth == 0 and tokens[k].kind == "ident" and start_ok:
                decl = reader.read_declarator(k)
                if decl is not None:
                    types, names, end = decl
                    bound = types[0] if len(types) == 1 and types[0] and types[0] != "var" else None
                    for name in names:
                        fields[name] = bound
                    k = end
                    start_ok = False
                    continue
            start_ok = text in (";", "{", "}") or (
                tokens[k].kind == "keyword" and tokens[k].text in MODIFIERS
            )
            k += 1
        bodies[open_idx] = fields
    return bodies


class _Scanner:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.reader = _TypeReader(tokens)
        self.pairs = _match_braces(tokens)
        self.type_bodies = _prescan_fields(tokens, self.pairs)
        self.usage = ApiUsage()
        self.scopes: list[dict[str, Optional[str]]] = [{}]
        self.pending_params: dict[str, Optional[str]] = {}

    def lookup(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def is_bound(self, name: str) -> bool:
        return any(name in scope for scope in self.scopes)

    def declare(self, name: str, type_name: Optional[str]) -> None:
        self.scopes[-1][name] = type_name

    def run(self) -> ApiUsage:
        toks = self.toks
        i = 0
        paren = 0
        prev: Optional[Token] = None
        while i < len(toks):
            t = toks[i]
            if t.text == "{":
                scope = dict(self.type_bodies.get(i, {}))
                scope.update(self.pending_params)
                self.scopes.append(scope)
                self.pending_params = {}
                prev = t
                i += 1
                continue
            if t.text == "}":
                if len(self.scopes) > 1:
                    self.scopes.pop()
                prev = t
                i += 1
                continue
            if t.text == "(":
                paren += 1
            elif t.text == ")":
                paren = max(0, paren - 1)
            elif t.text == ";" and paren == 0:
                self.pending_params = {}

            if t.kind == "keyword" and t.text == "import":
                i = self.scan_import(i)
                prev = None
                continue
            if t.kind == "keyword" and t.text == "package":
                while i < len(toks) and toks[i].text != ";":
                    i += 1
                prev = None
                continue
            if t.kind == "keyword" and t.text == "new":
                parsed = self.reader.parse_type(i + 1)
                if parsed and parsed[0]:
                    self.usage.classes[parsed[0]] += 1
                prev = t
                i += 1
                continue
            if t.kind == "keyword" and t.text == "instanceof":
                parsed = self.reader.parse_type(i + 1)
                if parsed is not None:
                    name, j = parsed
                    if name:
                        self.usage.classes[name] += 1
                    if j < len(toks) and toks[j].kind == "ident":
                        self.declare(toks[j].text, name or None)
                        prev = toks[j]
                        i = j + 1
                        continue
                prev = t
                i += 1
                continue
            if t.kind == "keyword" and t.text in TYPE_DECL_KEYWORDS:
                # skip the declared type's own name (extends/implements
                # clauses are not usage evidence in this scan)
                if i + 1 < len(toks) and toks[i + 1].kind == "ident":
                    i += 2
                else:
                    i += 1
                prev = t
                continue
            if t.text == "@":
                j = i + 1
                while j + 1 < len(toks) and toks[j].kind == "ident" and toks[j + 1].text == ".":
                    j += 2
                if j < len(toks) and toks[j].kind == "ident":
                    prev = None
                    i = j + 1
                    continue

            if t.kind == "ident":
                nxt = toks[i + 1] if i + 1 < len(toks) else None
                if nxt is not None and nxt.text == "(" and not self.is_declaration_header(i):
                    if prev is not None and prev.text == ".":
                        self.record_dotted_call(i)
                        prev = t
                        i += 1
                        continue
                    if prev is None or (prev.text != "new" and not _type_prefix(prev)):
                        self.usage.methods[(t.text, None)] += 1
                        prev = t
                        i += 1
                        continue
                if self.at_declaration_start(prev):
                    decl = self.reader.read_declarator(i)
                    if decl is not None:
                        types, names, end = decl
                        self.record_declaration(types, names, i, end)
                        prev = toks[end - 1] if end > 0 else None
                        i = end
                        continue
            prev = t
            i += 1
        return self.usage

    def scan_import(self, i: int) -> int:
        toks = self.toks
        j = i + 1
        static = j < len(toks) and toks[j].kind == "keyword" and toks[j].text == "static"
        if static:
            j += 1
        parts: list[str] = []
        wildcard = False
        while j < len(toks) and toks[j].text != ";":
            if toks[j].kind == "ident":
                parts.append(toks[j].text)
            elif toks[j].text == "*":
                wildcard = True
            j += 1
        if parts and not wildcard and not static:
            self.usage.classes[parts[-1]] += 1
        return j + 1 if j < len(toks) else j

    def is_declaration_header(self, i: int) -> bool:
        """ident( ... ) followed by `{` or `throws` is a method/constructor
        declaration, not a call."""
        toks = self.toks
        j = i + 1
        depth = 0
        while j < len(toks):
            if toks[j].text == "(":
                depth += 1
            elif toks[j].text == ")":
                depth -= 1
                if depth == 0:
                    break
            j += 1
        j += 1
        return j < len(toks) and (toks[j].text == "{" or toks[j].text == "throws")

    def record_dotted_call(self, i: int) -> None:
        toks = self.toks
        name = toks[i].text
        hint: Optional[str] = None
        if i >= 2 and toks[i - 2].kind == "ident":
            receiver = toks[i - 2].text
            declared = self.lookup(receiver)
            if declared:
                hint = declared
            elif not self.is_bound(receiver) and receiver[0].isupper() and not receiver.isupper():
                hint = receiver  # static call through the type name
        self.usage.methods[(name, hint)] += 1

    def at_declaration_start(self, prev: Optional[Token]) -> bool:
        if prev is None:
            return True
        if prev.text in (";", "{", "}", "(", ","):
            return True
        return prev.kind == "keyword" and prev.text in MODIFIERS

    def record_declaration(self, types: list[str], names: list[str], start: int, end: int) -> None:
        for type_name in types:
            if type_name and type_name != "var":
                self.usage.classes[type_name] += len(names)
        bound = types[0] if len(types) == 1 and types[0] and types[0] != "var" else None
        for name in names:
            self.declare(name, bound)
            self.pending_params[name] = bound
        # usages inside initializer expressions still count
        j = start
        while j < end:
            t = self.toks[j]
            if t.kind == "keyword" and t.text == "new":
                parsed = self.reader.parse_type(j + 1)
                if parsed and parsed[0]:
                    self.usage.classes[parsed[0]] += 1
                    j = parsed[1]
                    continue
            if (
                t.kind == "ident"
                and j + 1 < end
                and self.toks[j + 1].text == "("
                and self.toks[j - 1].text != "new"
                and not self.is_declaration_header(j)
            ):
                if self.toks[j - 1].text == ".":
                    self.record_dotted_call(j)
                elif not _type_prefix(self.toks[j - 1]):
                    self.usage.methods[(t.text, None)] += 1
            j += 1


def extract_api_usages(source: str | bytes) -> ApiUsage:
    """Collect API-usage evidence from one Java source file.

    Accepts text or raw bytes; invalid UTF-8 byte sequences are replaced and
    the result is flagged via ``decode_replaced``.
    """
    replaced = False
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError:
            text = source.decode("utf-8", errors="replace")
            replaced = True
    else:
        text = source
    usage = _Scanner(tokenize(text)).run()
    usage.decode_replaced = replaced
    return usage
