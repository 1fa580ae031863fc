"""Word-level trees to binarized character-level trees and back.

Forward direction (``to_char_tree``), in order: every word leaf is expanded
into its characters, each wrapped in a node labeled "@1" under the word's
POS node; unary chains are merged into single '+'-joined labels; and the
tree is left-binarized, labeling intermediate nodes "@2" inside word
subtrees and "∅" at phrase level.

The reverse direction (``from_char_tree``) must stay total on arbitrary
binary trees, because decoder output can place "@1"/"@2"/"∅" anywhere.  It
splits merged labels, splices out "∅" and "@2" nodes, rebuilds words from
maximal runs of "@1" siblings (stray characters become singleton words),
and inserts an "X" pre-terminal over any word whose parent is not already
a pre-terminal covering exactly that word.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable

from .labels import (CHAR_LABEL, NULL_LABEL, NULL_TOKEN, SUBWORD_LABEL,
                     UNARY_JOIN, is_word_internal)
from .treebank import SyntaxTree, TreeFormatError, parse_bracketed

_BAD_CHARS = set(" \t\r\n()")


class CharTree:
    """A strictly binary tree over the characters of one sentence.

    Leaves carry a single character and a label whose final '+'-segment is
    "@1" in well-formed trees (decoder output may break that).  ``span`` is
    the half-open character interval (i, j) the node covers.
    """

    __slots__ = ("label", "left", "right", "char", "span")

    def __init__(self, label: str, *, char: str | None = None, start: int = 0,
                 left: "CharTree | None" = None, right: "CharTree | None" = None):
        if not label:
            raise ValueError("char-tree node must have a non-empty label")
        if char is not None:
            if left is not None or right is not None:
                raise ValueError("a leaf cannot have children")
            if len(char) != 1 or char in _BAD_CHARS:
                raise ValueError(f"leaf char must be a single printable character, got {char!r}")
            span = (start, start + 1)
        else:
            if left is None or right is None:
                raise ValueError("internal node needs both children")
            if left.span[1] != right.span[0]:
                raise ValueError(f"child spans {left.span} and {right.span} do not abut")
            span = (left.span[0], right.span[1])
        self.label = label
        self.char = char
        self.left = left
        self.right = right
        self.span = span

    @property
    def is_leaf(self) -> bool:
        return self.char is not None

    def sentence(self) -> str:
        """The characters the tree covers, left to right."""
        if self.char is not None:
            return self.char
        return self.left.sentence() + self.right.sentence()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CharTree):
            return NotImplemented
        return (self.label == other.label and self.char == other.char
                and self.span == other.span and self.left == other.left
                and self.right == other.right)

    def __hash__(self) -> int:
        return hash((self.label, self.char, self.span))

    def __repr__(self) -> str:
        return serialize_char_tree(self)


@dataclass
class WordSegmentation:
    """Contiguous word spans over [0, n) in character offsets."""

    spans: list[tuple[int, int]]
    words: list[str]

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "WordSegmentation":
        words = list(words)
        spans = []
        pos = 0
        for w in words:
            spans.append((pos, pos + len(w)))
            pos += len(w)
        return cls(spans, words)


@dataclass
class GoldSpanMap:
    """Span -> label entries read off one character-level tree.

    Spans absent from ``entries`` are implicitly the null label "∅".
    """

    n: int
    entries: dict[tuple[int, int], str]

    def label_of(self, i: int, j: int) -> str:
        return self.entries.get((i, j), NULL_LABEL)


def segmentation_of(word_tree: SyntaxTree) -> WordSegmentation:
    """Gold segmentation: cumulative character offsets of the leaf words."""
    return WordSegmentation.from_words(word_tree.leaves())


# ---------------------------------------------------------------------------
# word-level -> character-level


def _expand_words(tree: SyntaxTree) -> SyntaxTree:
    if tree.token is not None:
        raise ValueError(f"word leaf {tree.token!r} has no pre-terminal parent")
    if tree.is_preterminal:
        token = tree.children[0].token
        chars = [SyntaxTree(CHAR_LABEL, [SyntaxTree(token=c)]) for c in token]
        return SyntaxTree(tree.label, chars)
    return SyntaxTree(tree.label, [_expand_words(c) for c in tree.children])


def _merge_unary(tree: SyntaxTree) -> SyntaxTree:
    if tree.token is not None:
        return tree
    labels = [tree.label]
    node = tree
    while len(node.children) == 1 and node.children[0].token is None:
        node = node.children[0]
        labels.append(node.label)
    return SyntaxTree(UNARY_JOIN.join(labels),
                      [_merge_unary(c) for c in node.children])


def _tree_word_internal(ct: CharTree) -> bool:
    if not is_word_internal(ct.label):
        return False
    if ct.char is not None:
        return True
    return _tree_word_internal(ct.left) and _tree_word_internal(ct.right)


def _binarize(tree: SyntaxTree, start: int) -> tuple[CharTree, int]:
    if len(tree.children) == 1:
        # merged chain over a single character
        return CharTree(tree.label, char=tree.children[0].token, start=start), start + 1
    kids = []
    pos = start
    for c in tree.children:
        ct, pos = _binarize(c, pos)
        kids.append(ct)
    node = kids[0]
    internal = _tree_word_internal(node)
    for k in kids[1:-1]:
        internal = internal and _tree_word_internal(k)
        lab = SUBWORD_LABEL if internal else NULL_LABEL
        node = CharTree(lab, left=node, right=k)
    return CharTree(tree.label, left=node, right=kids[-1]), pos


def to_char_tree(word_tree: SyntaxTree) -> CharTree:
    """Encode a word-level tree as a binary character-level tree.

    The fringe of the result is the character sequence of the sentence.
    Raises ValueError when a word leaf is not under a pre-terminal.
    """
    return _binarize(_merge_unary(_expand_words(word_tree)), 0)[0]


def gold_span_labels(char_tree: CharTree) -> GoldSpanMap:
    """One entry per tree node, keyed by its character span."""
    entries: dict[tuple[int, int], str] = {}

    def walk(ct: CharTree) -> None:
        if ct.span in entries:
            raise RuntimeError(f"duplicate span {ct.span} in char tree")
        entries[ct.span] = ct.label
        if ct.char is None:
            walk(ct.left)
            walk(ct.right)

    walk(char_tree)
    return GoldSpanMap(char_tree.span[1], entries)


# ---------------------------------------------------------------------------
# character-level -> word-level


class _Node:
    __slots__ = ("label", "kids")

    def __init__(self, label: str, kids: list):
        self.label = label
        self.kids = kids


def _split_chains(ct: CharTree):
    # Empty segments can only come from labels outside our own encoding;
    # drop them so recovery stays total.
    segs = [s for s in ct.label.split(UNARY_JOIN) if s] or [NULL_LABEL]
    if ct.char is not None:
        node = ct.char
    else:
        node = _Node(segs.pop(), [_split_chains(ct.left), _split_chains(ct.right)])
    while segs:
        node = _Node(segs.pop(), [node])
    return node


def _splice(node, label: str) -> list:
    if isinstance(node, str):
        return [node]
    kids: list = []
    for k in node.kids:
        kids.extend(_splice(k, label))
    if node.label == label:
        return kids
    node.kids = kids
    return [node]


def _chars_of(node, out: list[str]) -> None:
    if isinstance(node, str):
        out.append(node)
        return
    for k in node.kids:
        _chars_of(k, out)


_WORD = object()  # tag for (word, text) items below


def _group_words(kids: list) -> list:
    """Turn a sibling list into a list of (_WORD, text) items and recovered
    subtrees, merging maximal runs of "@1" siblings into single words."""
    items: list = []
    run: list = []

    def flush() -> None:
        if run:
            chars: list[str] = []
            for r in run:
                _chars_of(r, chars)
            items.append((_WORD, "".join(chars)))
            run.clear()

    for k in kids:
        if isinstance(k, str):
            flush()
            items.append((_WORD, k))
        elif k.label == CHAR_LABEL:
            run.append(k)
        else:
            flush()
            items.append(_recover_node(k))
    flush()
    return items


def _as_child(item) -> SyntaxTree:
    if isinstance(item, SyntaxTree):
        return item
    return SyntaxTree("X", [SyntaxTree(token=item[1])])


def _recover_node(node: _Node) -> SyntaxTree:
    items = _group_words(node.kids)
    if len(items) == 1 and not isinstance(items[0], SyntaxTree):
        # the node covers exactly one word: it is that word's pre-terminal
        return SyntaxTree(node.label, [SyntaxTree(token=items[0][1])])
    return SyntaxTree(node.label, [_as_child(it) for it in items])


def from_char_tree(char_tree: CharTree) -> tuple[SyntaxTree, WordSegmentation]:
    """Decode a binary character-level tree back to a word-level tree.

    Total on arbitrary input: every character lands in exactly one word and
    the returned segmentation covers [0, n) without gaps or overlaps.
    """
    root = _split_chains(char_tree)
    forest = _splice(root, NULL_LABEL)
    spliced: list = []
    for x in forest:
        spliced.extend(_splice(x, SUBWORD_LABEL))
    items = _group_words(spliced)
    tops = [_as_child(it) for it in items]
    tree = tops[0] if len(tops) == 1 else SyntaxTree("TOP", tops)
    return tree, WordSegmentation.from_words(tree.leaves())


# ---------------------------------------------------------------------------
# serialization: same bracketed format, "∅" spelled as the token "NULL"


def serialize_char_tree(ct: CharTree) -> str:
    label = NULL_TOKEN if ct.label == NULL_LABEL else ct.label
    if ct.char is not None:
        return f"({label} {ct.char})"
    return f"({label} {serialize_char_tree(ct.left)} {serialize_char_tree(ct.right)})"


def _char_tree_of(tree: SyntaxTree, start: int) -> tuple[CharTree, int]:
    label = NULL_LABEL if tree.label == NULL_TOKEN else tree.label
    if tree.is_preterminal:
        ch = tree.children[0].token
        if len(ch) != 1:
            raise TreeFormatError(f"char-tree leaf {ch!r} is not a single character")
        return CharTree(label, char=ch, start=start), start + 1
    if len(tree.children) != 2:
        raise TreeFormatError(
            f"char trees are strictly binary, found {len(tree.children)} children "
            f"under {tree.label!r}")
    left, pos = _char_tree_of(tree.children[0], start)
    right, pos = _char_tree_of(tree.children[1], pos)
    return CharTree(label, left=left, right=right), pos


def parse_char_trees(text: str) -> list[CharTree]:
    out = []
    for tree in parse_bracketed(text):
        ct, _ = _char_tree_of(tree, 0)
        out.append(ct)
    return out


def load_char_trees(path: str | os.PathLike) -> list[CharTree]:
    with io.open(path, "r", encoding="utf-8") as f:
        return parse_char_trees(f.read())


def save_char_trees(trees: Iterable[CharTree], path: str | os.PathLike) -> None:
    with io.open(path, "w", encoding="utf-8") as f:
        for ct in trees:
            f.write(serialize_char_tree(ct))
            f.write("\n")
