"""Reserved labels of the character-level tree encoding.

Three labels have fixed meaning: ``NULL_LABEL`` marks spans that are not
constituents (binarization fill-in at phrase level and the implicit label of
unlisted spans), ``CHAR_LABEL`` terminates every single character, and
``SUBWORD_LABEL`` marks the spine nodes created when a word of three or more
characters is binarized.  Merged unary chains join their labels with
``UNARY_JOIN``.
"""

NULL_LABEL = "∅"       # ∅
CHAR_LABEL = "@1"
SUBWORD_LABEL = "@2"
UNARY_JOIN = "+"

# ASCII stand-in for NULL_LABEL in serialized tree and score files.
NULL_TOKEN = "NULL"

# Labels that source treebanks may not use for their own nonterminals.
RESERVED_LABELS = frozenset({NULL_LABEL, CHAR_LABEL, SUBWORD_LABEL, NULL_TOKEN})


def segments(label: str) -> list[str]:
    """Split a possibly merged label into its unary-chain segments."""
    return label.split(UNARY_JOIN)


def is_char_label(label: str) -> bool:
    """True if the label terminates a single character (final segment @1)."""
    return label == CHAR_LABEL or label.endswith(UNARY_JOIN + CHAR_LABEL)


def is_word_internal(label: str) -> bool:
    """True if every segment of the label is @1 or @2, i.e. the label can
    only occur strictly inside one word's subtree."""
    return all(seg in (CHAR_LABEL, SUBWORD_LABEL) for seg in segments(label))
