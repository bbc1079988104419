"""
From markup to a page record
----------------------------

A page is reduced to three things: its visible words, one XPath per DOM node,
and the parent/child edges between nodes. Broken markup is fine.
"""

from pagegnn.dom import clean_html, page_to_record, parse_dom, xpath_units

raw = """<html><head><title>Daily prices</title><script>track()</script></head>
<body><div id=main><ul><li>Stock up 3%</li><li>Bond yields flat</li></ul>
<p>Markets closed <b>early</b> today<!-- ad slot --></div></body>"""

cleaned = clean_html(raw)
print(cleaned)

###############################################################################
# The tree keeps only element nodes. Sibling subscripts count earlier
# siblings with the same tag, starting at zero.

tree = parse_dom(cleaned)
for i, node in enumerate(tree.nodes):
    path = "/".join(f"{t}[{s}]" for t, s in xpath_units(tree, i))
    print(f"{i:2d} {path:40s} {node.leaf_text!r}")

###############################################################################
# ``page_to_record`` bundles it up. Page text comes only from childless
# elements, so "Markets closed ... today" around the ``<b>`` is not kept.
# Every non-root node contributes one edge in each direction.

rec = page_to_record(raw, "finance", page_id="prices.html")
print(rec.tokens)
print(len(rec.nodes), "nodes,", len(rec.edges), "edges")
