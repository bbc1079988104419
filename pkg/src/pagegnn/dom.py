"""HTML cleaning, lenient DOM parsing, leaf text, XPath units and edges.

The parser is deliberately forgiving: it never rejects markup. Unclosed
elements are closed when an enclosing element closes, stray end tags are
dropped, and the ``html``/``body`` wrappers are synthesized when missing, so
every non-blank input yields a single tree rooted at ``html``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .errors import EmptyDocument, IndexOutOfRange

REMOVED_ELEMENTS = ("script", "style", "noscript", "iframe")
VOID_ELEMENTS = frozenset(
    {
        "area", "base", "br", "col", "embed", "hr", "img", "input",
        "link", "meta", "param", "source", "track", "wbr",
    }
)
HEAD_ELEMENTS = frozenset({"title", "meta", "link", "base"})

MAX_XPATH_UNITS = 15
MAX_SUBSCRIPT = 63

_REMOVABLE = re.compile(
    r"<!--.*?(?:-->|\Z)"
    r"|<(" + "|".join(REMOVED_ELEMENTS) + r")(?=[\s/>])[^>]*>.*?(?:</\1\s*>|\Z)",
    re.IGNORECASE | re.DOTALL,
)


@dataclass
class DomNode:
    tag: str
    parent: int | None
    subscript: int
    leaf_text: str | None = None
    children: list[int] = field(default_factory=list)


@dataclass
class DomTree:
    nodes: list[DomNode]
    root_index: int = 0

    def __len__(self):
        return len(self.nodes)

    def depth(self, index: int) -> int:
        d = 0
        while self.nodes[index].parent is not None:
            index = self.nodes[index].parent
            d += 1
        return d


@dataclass(frozen=True)
class PageRecord:
    """One page reduced to what the model consumes."""

    id: str
    label: str
    tokens: list[str]
    nodes: list[list[tuple[str, int]]]
    edges: list[tuple[int, int]]


def clean_html(raw: str | bytes) -> str:
    """Drop comments and script/style/noscript/iframe elements.

    Everything outside the removed spans is returned untouched. An element
    or comment left open at end of input is removed up to the end.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    return _REMOVABLE.sub("", raw)


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.nodes: list[DomNode] = []
        self.text: dict[int, list[str]] = {}
        self.stack: list[int] = []
        self.head: int | None = None
        self.body: int | None = None

    def _add(self, tag, push=True):
        parent = self.stack[-1] if self.stack else None
        if parent is None:
            subscript = 0
        else:
            siblings = self.nodes[parent].children
            subscript = sum(1 for c in siblings if self.nodes[c].tag == tag)
        index = len(self.nodes)
        self.nodes.append(DomNode(tag=tag, parent=parent, subscript=subscript))
        if parent is not None:
            self.nodes[parent].children.append(index)
        if push and tag not in VOID_ELEMENTS:
            self.stack.append(index)
        return index

    def _ensure_root(self):
        if not self.nodes:
            self._add("html")

    def _ensure_body(self):
        self._ensure_root()
        if self.body is None:
            del self.stack[1:]
            self.body = self._add("body")
        elif self.body not in self.stack:
            # content after a closed head lands back in the body
            del self.stack[1:]
            self.stack.append(self.body)

    def _in_head(self):
        return self.head is not None and self.head in self.stack

    def _open(self, tag, push):
        if tag == "html":
            self._ensure_root()
            return
        if tag == "head":
            self._ensure_root()
            if self.head is None and self.body is None and self.stack == [0]:
                self.head = self._add("head")
            return
        if tag == "body":
            self._ensure_body()
            return
        self._ensure_root()
        if self.body is None and tag in HEAD_ELEMENTS:
            if self.head is None:
                del self.stack[1:]
                self.head = self._add("head")
            elif not self._in_head():
                del self.stack[1:]
                self.stack.append(self.head)
        elif self.stack[-1] == 0 or self._in_head():
            self._ensure_body()
        self._add(tag, push)

    def handle_starttag(self, tag, attrs):
        self._open(tag, push=True)

    def handle_startendtag(self, tag, attrs):
        self._open(tag, push=False)

    def handle_endtag(self, tag):
        if tag in ("html", "body"):
            return
        for pos in range(len(self.stack) - 1, 0, -1):
            if self.nodes[self.stack[pos]].tag == tag:
                del self.stack[pos:]
                return

    def handle_data(self, data):
        if not data.strip():
            return
        self._ensure_root()
        top = self.stack[-1]
        if top == 0 or top == self.head:
            self._ensure_body()
            top = self.stack[-1]
        self.text.setdefault(top, []).append(data)


def parse_dom(cleaned: str) -> DomTree:
    """Parse markup into a ``DomTree`` rooted at ``html``.

    Raises ``EmptyDocument`` for blank input.
    """
    if not cleaned.strip():
        raise EmptyDocument("document is empty or whitespace-only")
    builder = _TreeBuilder()
    builder.feed(cleaned)
    builder.close()
    builder._ensure_root()
    nodes = builder.nodes
    for index, parts in builder.text.items():
        if not nodes[index].children:
            nodes[index].leaf_text = "".join(parts)
    return DomTree(nodes=nodes, root_index=0)


def extract_text(tree: DomTree) -> str:
    fragments = (n.leaf_text.strip() for n in tree.nodes if n.leaf_text is not None)
    return " ".join(f for f in fragments if f)


def xpath_units(
    tree: DomTree,
    node: int,
    max_units: int = MAX_XPATH_UNITS,
    max_subscript: int = MAX_SUBSCRIPT,
) -> list[tuple[str, int]]:
    """Root-to-node ``(tag, subscript)`` steps.

    Paths deeper than ``max_units`` keep their last ``max_units`` steps, and
    subscripts are clamped to ``max_subscript``.
    """
    if not 0 <= node < len(tree.nodes):
        raise IndexOutOfRange(f"node index {node} outside 0..{len(tree.nodes) - 1}")
    units = []
    cur = node
    while cur is not None:
        n = tree.nodes[cur]
        units.append((n.tag, min(n.subscript, max_subscript)))
        cur = n.parent
    units.reverse()
    return units[-max_units:]


def build_edge_list(tree: DomTree) -> list[tuple[int, int]]:
    edges = []
    for child, n in enumerate(tree.nodes):
        if n.parent is not None:
            edges.append((n.parent, child))
            edges.append((child, n.parent))
    return edges


def page_to_record(
    raw: str | bytes,
    label,
    page_id: str = "",
    max_units: int = MAX_XPATH_UNITS,
) -> PageRecord:
    from .text import tokenize

    tree = parse_dom(clean_html(raw))
    return PageRecord(
        id=page_id,
        label=label,
        tokens=tokenize(extract_text(tree)),
        nodes=[xpath_units(tree, i, max_units) for i in range(len(tree.nodes))],
        edges=build_edge_list(tree),
    )
