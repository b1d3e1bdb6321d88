"""Drain: online template mining with a fixed-depth prefix tree.

Lines are routed by token count, then by their leading ``depth - 2``
tokens (tokens containing a digit route through the wildcard branch).
At a leaf the most similar cluster is joined when the share of equal
non-wildcard positions reaches ``sim_threshold``; joining wildcards the
positions that differ.  Otherwise the line starts a new cluster.

Template 0 is reserved for lines with empty content.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigurationError

WILDCARD = "<*>"
EMPTY_TEMPLATE_ID = 0


@dataclass
class LogTemplate:
    template_id: int
    tokens: list[str]

    @property
    def pattern(self) -> str:
        return " ".join(self.tokens)

    def matches(self, content: str) -> bool:
        toks = content.split()
        if len(toks) != len(self.tokens):
            return False
        return all(t == WILDCARD or t == c for t, c in zip(self.tokens, toks))


@dataclass
class _Node:
    children: dict = field(default_factory=dict)
    clusters: list = field(default_factory=list)


def _has_digit(token: str) -> bool:
    return any(ch.isdigit() for ch in token)


def _similarity(template: list[str], tokens: list[str]) -> tuple[float, int]:
    same = 0
    wild = 0
    for t, c in zip(template, tokens):
        if t == WILDCARD:
            wild += 1
        elif t == c:
            same += 1
    return same / len(tokens), wild


class DrainParser:
    def __init__(self, depth: int = 4, sim_threshold: float = 0.4, max_children: int = 100):
        if depth < 3:
            raise ConfigurationError("Drain depth must be at least 3")
        if not 0.0 < sim_threshold < 1.0:
            raise ConfigurationError("similarity threshold must lie in (0, 1)")
        if max_children < 2:
            raise ConfigurationError("max_children must be at least 2")
        self.depth = depth
        self.sim_threshold = sim_threshold
        self.max_children = max_children
        self.root = _Node()
        self.templates: list[LogTemplate] = [LogTemplate(EMPTY_TEMPLATE_ID, [])]

    def _leaf(self, tokens: list[str]) -> _Node:
        node = self.root.children.setdefault(len(tokens), _Node())
        for tok in tokens[: self.depth - 2]:
            key = WILDCARD if _has_digit(tok) else tok
            if key not in node.children:
                if key != WILDCARD and len(node.children) >= self.max_children - 1:
                    # node is full: keep the last slot for the wildcard branch
                    key = WILDCARD
                node = node.children.setdefault(key, _Node())
            else:
                node = node.children[key]
        return node

    def add(self, content: str) -> int:
        """Assign ``content`` to a template (creating or widening one); returns its id."""
        tokens = content.split()
        if not tokens:
            return EMPTY_TEMPLATE_ID
        leaf = self._leaf(tokens)
        best = None
        best_key = (-1.0, -1)
        for tpl in leaf.clusters:
            key = _similarity(tpl.tokens, tokens)
            if key > best_key:
                best, best_key = tpl, key
        if best is not None and best_key[0] >= self.sim_threshold:
            best.tokens = [t if t == c else WILDCARD for t, c in zip(best.tokens, tokens)]
            return best.template_id
        tpl = LogTemplate(len(self.templates), list(tokens))
        self.templates.append(tpl)
        leaf.clusters.append(tpl)
        return tpl.template_id

    def parse(self, contents) -> list[int]:
        return [self.add(c) for c in contents]


def drain_parse(
    lines, depth: int = 4, sim_threshold: float = 0.4, max_children: int = 100
) -> tuple[list[LogTemplate], list[int]]:
    """Parse ``RawLogLine`` records (or plain strings) in order.

    Returns the template list (index == id, entry 0 the reserved empty
    template) and one event id per line.
    """
    parser = DrainParser(depth, sim_threshold, max_children)
    ids = [parser.add(getattr(line, "content", line)) for line in lines]
    return parser.templates, ids
