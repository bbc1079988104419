"""Small generated corpora with known separating signals, and tag soup.

``separable_corpus``
    nested div/ul pages with one vocabulary against flat table pages with
    another; both text and structure separate the classes.
``structure_only_corpus``
    the same two layouts, but every page carries the same multiset of words.
``text_only_corpus``
    one fixed layout for every page, with a different vocabulary per class.
"""

from __future__ import annotations

import numpy as np

from .dom import page_to_record

VOCAB_A = (
    "market stock price shares investor trading profit quarter revenue bank "
    "economy growth inflation rate bond fund earnings dividend index capital"
).split()
VOCAB_B = (
    "recipe flour sugar butter oven bake dough whisk salt pepper garlic onion "
    "simmer boil roast sauce cream cheese basil lemon"
).split()
SHARED_WORDS = "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu".split()


def _words(rng, vocab, lo=2, hi=5):
    return " ".join(rng.choice(vocab, size=int(rng.integers(lo, hi + 1))))


def _split_words(rng, words, parts):
    """Shuffle ``words`` and cut into ``parts`` non-empty strings."""
    words = list(rng.permutation(words))
    cuts = np.sort(rng.choice(np.arange(1, len(words)), size=parts - 1, replace=False))
    return [" ".join(chunk) for chunk in np.split(np.array(words, dtype=object), cuts)]


def nested_page(leaf_texts, depth):
    items = "".join(f"<li>{t}</li>" for t in leaf_texts)
    return ("<html><body>" + "<div>" * depth + f"<ul>{items}</ul>" + "</div>" * depth
            + "</body></html>")


def table_page(leaf_texts, cols):
    rows = [leaf_texts[i:i + cols] for i in range(0, len(leaf_texts), cols)]
    body = "".join("<tr>" + "".join(f"<td>{t}</td>" for t in row) + "</tr>" for row in rows)
    return f"<html><body><table>{body}</table></body></html>"


def fixed_page(leaf_texts):
    paras = "".join(f"<p>{t}</p>" for t in leaf_texts)
    return f"<html><body><div><h1>{leaf_texts[0]}</h1></div><div>{paras}</div></body></html>"


def _records(pages):
    return [page_to_record(html, label, page_id=f"{label}/{i:03d}.html")
            for i, (html, label) in enumerate(pages)]


def separable_corpus(n_per_class=30, seed=0):
    rng = np.random.default_rng(seed)
    pages = []
    for _ in range(n_per_class):
        texts = [_words(rng, VOCAB_A) for _ in range(int(rng.integers(3, 7)))]
        pages.append((nested_page(texts, int(rng.integers(3, 7))), "nested"))
        texts = [_words(rng, VOCAB_B) for _ in range(int(rng.integers(4, 13)))]
        pages.append((table_page(texts, int(rng.integers(2, 5))), "table"))
    return _records(pages)


def structure_only_corpus(n_per_class=30, seed=0):
    rng = np.random.default_rng(seed)
    pages = []
    for _ in range(n_per_class):
        texts = _split_words(rng, SHARED_WORDS, int(rng.integers(3, 7)))
        pages.append((nested_page(texts, int(rng.integers(3, 7))), "nested"))
        texts = _split_words(rng, SHARED_WORDS, int(rng.integers(4, 10)))
        pages.append((table_page(texts, int(rng.integers(2, 5))), "table"))
    return _records(pages)


def text_only_corpus(n_per_class=30, seed=0, leaves=4):
    rng = np.random.default_rng(seed)
    pages = []
    for _ in range(n_per_class):
        pages.append((fixed_page([_words(rng, VOCAB_A) for _ in range(leaves)]), "finance"))
        pages.append((fixed_page([_words(rng, VOCAB_B) for _ in range(leaves)]), "cooking"))
    return _records(pages)


_SOUP_TAGS = ("html", "head", "body", "div", "p", "span", "a", "ul", "li", "table", "tr",
              "td", "b", "i", "h1", "title", "section", "br", "img", "hr", "input", "meta")


def random_tag_soup(rng, max_pieces=40) -> str:
    """Random, usually malformed, markup for fuzzing the parser."""
    pieces = []
    for _ in range(int(rng.integers(1, max_pieces + 1))):
        kind = rng.integers(0, 12)
        tag = str(rng.choice(_SOUP_TAGS))
        if kind <= 3:
            pieces.append(f"<{tag}>")
        elif kind <= 5:
            pieces.append(f"</{tag}>")
        elif kind <= 7:
            pieces.append(_words(rng, VOCAB_A + SHARED_WORDS, 1, 3))
        elif kind == 8:
            pieces.append(str(rng.choice(["<!-- note -->", "<!-- open", "<script>x<1</script>",
                                          "<style>p{}</style>", "<iframe>", "<!DOCTYPE html>"])))
        elif kind == 9:
            pieces.append(str(rng.choice(["<", ">", "&amp;", "&bogus;", "</", "<<p", "<div/>",
                                          '<a href="x>', "\x00", "é ü 中文"])))
        elif kind == 10:
            pieces.append(f'<{tag} class="c{int(rng.integers(9))}" id=x>')
        else:
            pieces.append(" \n\t ")
    return "".join(pieces)
