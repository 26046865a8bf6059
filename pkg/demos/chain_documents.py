"""
Chain documents
===============

A chain family written as JSON with expressions in i (step) and n (length).
"""

import json

from nhmc.chain import build_dobrushin_example, power_rate
from nhmc.specfmt import SpecError, dobrushin_document, dump_document, instantiate, parse_document

# The block chain as a document: three kernels and a first-match schedule
# ending in the mandatory catch-all.
text = dump_document(dobrushin_document(1 / 3))
print(text)

doc = parse_document(text)
print("same chain as the builder:", instantiate(doc, 1000) == build_dobrushin_example(1000, power_rate(1 / 3)))

# Mistakes are reported with a kind, a location and, for syntax errors,
# the tokens that would have been accepted.
bad = json.loads(text)
bad["kernels"]["Qa"][0][1] = "min(1 / 2, pow(n, -1 / 3)"
try:
    parse_document(json.dumps(bad, indent=2))
except SpecError as err:
    print(err)

# Rows are checked only once the expressions are evaluated at a given n.
bad = json.loads(text)
bad["kernels"]["Qb"][1][1] = "a + i / n"
try:
    instantiate(parse_document(json.dumps(bad)), 50)
except SpecError as err:
    print(err)
