"""Reading and writing PTB/CTB-style bracketed parse trees.

Trees are s-expressions over UTF-8 text: ``(IP (NP (NN 中国)) (VP (VV 发展)))``.
A node body holds either exactly one token (making the node a pre-terminal)
or one or more subtrees, never a mixture.  An unlabeled outer pair
``( ... )``, as written by CTB, is normalized to a root labeled "TOP".

Files carry one tree per line on write; reading accepts trees split across
lines.  A "character" anywhere in this package means one Unicode scalar
value, never a byte.
"""

from __future__ import annotations

import io
import os
from typing import Iterable, Iterator, Sequence

from .labels import RESERVED_LABELS, UNARY_JOIN

_WS = " \t\r\n"
_DELIM = "()"


class TreeFormatError(ValueError):
    """Malformed bracketed-tree text.  ``pos`` is a 0-based character offset
    into the parsed string when the error is tied to a location."""

    def __init__(self, message: str, pos: int | None = None):
        if pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)
        self.pos = pos


class SyntaxTree:
    """A word-level parse tree node.

    Internal nodes carry a non-empty ``label`` and at least one child.
    Leaves carry a ``token`` (one word), no children, and an empty label;
    construct them with ``SyntaxTree(token="word")``.  Instances are treated
    as immutable; all operations build new trees.
    """

    __slots__ = ("label", "children", "token")

    def __init__(self, label: str = "", children: Sequence["SyntaxTree"] = (),
                 token: str | None = None):
        children = tuple(children)
        if token is not None:
            if children:
                raise ValueError("a leaf cannot have children")
            if not token:
                raise ValueError("leaf token must be non-empty")
            if any(c in _WS or c in _DELIM for c in token):
                raise ValueError(f"leaf token {token!r} contains whitespace or brackets")
        else:
            if not label:
                raise ValueError("internal node must have a non-empty label")
            if not children:
                raise ValueError("internal node must have at least one child")
        self.label = label
        self.children = children
        self.token = token

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def is_preterminal(self) -> bool:
        """True for a node whose single child is a leaf, e.g. ``(NN 中国)``."""
        return len(self.children) == 1 and self.children[0].token is not None

    def leaves(self) -> list[str]:
        """Left-to-right leaf tokens (the fringe)."""
        if self.token is not None:
            return [self.token]
        out: list[str] = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SyntaxTree):
            return NotImplemented
        return (self.label == other.label and self.token == other.token
                and self.children == other.children)

    def __hash__(self) -> int:
        return hash((self.label, self.token, self.children))

    def __repr__(self) -> str:
        if self.token is not None:
            return self.token
        return serialize_bracketed(self)


class Corpus:
    """An ordered collection of trees read from one source."""

    def __init__(self, trees: Iterable[SyntaxTree], source_name: str = "<string>"):
        self.trees = list(trees)
        self.source_name = source_name

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self) -> Iterator[SyntaxTree]:
        return iter(self.trees)

    def __getitem__(self, idx):
        return self.trees[idx]

    def __repr__(self) -> str:
        return f"Corpus({len(self.trees)} trees from {self.source_name})"


def parse_bracketed(text: str, source_name: str = "<string>") -> Corpus:
    """Parse zero or more bracketed trees from ``text``.

    Raises TreeFormatError for unbalanced brackets, empty labels on nested
    nodes, empty nodes, and nodes mixing tokens with subtrees; the reported
    offset points into ``text``.
    """
    n = len(text)

    def skip_ws(i: int) -> int:
        while i < n and text[i] in _WS:
            i += 1
        return i

    def read_atom(i: int) -> tuple[str, int]:
        j = i
        while j < n and text[j] not in _WS and text[j] not in _DELIM:
            j += 1
        return text[i:j], j

    def parse_node(i: int, top: bool) -> tuple[SyntaxTree, int]:
        open_pos = i
        i = skip_ws(i + 1)
        if i >= n:
            raise TreeFormatError("unclosed '('", open_pos)
        if text[i] == ")":
            raise TreeFormatError("empty node", open_pos)
        if text[i] == "(":
            # An unlabeled wrapper is only legal around a whole tree.
            if not top:
                raise TreeFormatError("internal node with empty label", open_pos)
            label = "TOP"
        else:
            label, i = read_atom(i)
            i = skip_ws(i)
        children: list[SyntaxTree] = []
        token: str | None = None
        while True:
            if i >= n:
                raise TreeFormatError("unclosed '('", open_pos)
            ch = text[i]
            if ch == ")":
                i += 1
                break
            if ch == "(":
                if token is not None:
                    raise TreeFormatError("node mixes a token with subtrees", i)
                child, i = parse_node(i, False)
                children.append(child)
            else:
                atom_pos = i
                atom, i = read_atom(i)
                if token is not None:
                    raise TreeFormatError("more than one token in a node", atom_pos)
                if children:
                    raise TreeFormatError("node mixes a token with subtrees", atom_pos)
                token = atom
            i = skip_ws(i)
        if token is not None:
            return SyntaxTree(label, [SyntaxTree(token=token)]), i
        if not children:
            raise TreeFormatError("node has no token and no subtrees", open_pos)
        return SyntaxTree(label, children), i

    trees: list[SyntaxTree] = []
    i = 0
    while True:
        i = skip_ws(i)
        if i >= n:
            break
        if text[i] != "(":
            raise TreeFormatError(f"expected '(', found {text[i]!r}", i)
        tree, i = parse_node(i, True)
        trees.append(tree)
    return Corpus(trees, source_name)


def serialize_bracketed(tree: SyntaxTree) -> str:
    """Single-line bracketed form; inverse of parse_bracketed per tree."""
    if tree.token is not None:
        return tree.token
    inner = " ".join(serialize_bracketed(c) for c in tree.children)
    return f"({tree.label} {inner})"


def _strip_label(label: str) -> str:
    # Truncate at the first '-' or '='; trace labels like "-NONE-" start
    # with '-' and carry no function suffix, so they survive whole.
    if label[:1] in ("-", "="):
        return label
    for k, ch in enumerate(label):
        if ch in "-=":
            return label[:k]
    return label


def strip_function_tags(tree: SyntaxTree) -> SyntaxTree:
    """Drop CTB function suffixes: "NP-SBJ" -> "NP", "NP=1" -> "NP".

    Leaves are untouched and the structure is unchanged.
    """
    if tree.token is not None:
        return tree
    return SyntaxTree(_strip_label(tree.label),
                      [strip_function_tags(c) for c in tree.children])


def _reject_reserved(tree: SyntaxTree, idx: int) -> None:
    if tree.token is not None:
        return
    if tree.label in RESERVED_LABELS:
        raise TreeFormatError(
            f"tree {idx}: label {tree.label!r} is reserved by the "
            f"character-level encoding")
    if UNARY_JOIN in tree.label:
        raise TreeFormatError(
            f"tree {idx}: label {tree.label!r} contains {UNARY_JOIN!r}, "
            f"which is reserved for merged unary chains")
    for child in tree.children:
        _reject_reserved(child, idx)


def load_corpus(path: str | os.PathLike, strip_tags: bool = True) -> Corpus:
    """Read a UTF-8 treebank file.

    With ``strip_tags`` (the default) function suffixes are removed at load.
    Trees using labels reserved by the character-level encoding ("@1", "@2",
    "NULL", the null label) or containing '+' are rejected.
    """
    with io.open(path, "r", encoding="utf-8") as f:
        text = f.read()
    corpus = parse_bracketed(text, source_name=str(path))
    if strip_tags:
        corpus = Corpus([strip_function_tags(t) for t in corpus.trees],
                        corpus.source_name)
    for idx, tree in enumerate(corpus.trees):
        _reject_reserved(tree, idx)
    return corpus


def save_corpus(corpus: Corpus | Iterable[SyntaxTree], path: str | os.PathLike) -> None:
    """Write trees one per line, UTF-8."""
    with io.open(path, "w", encoding="utf-8") as f:
        for tree in corpus:
            f.write(serialize_bracketed(tree))
            f.write("\n")
