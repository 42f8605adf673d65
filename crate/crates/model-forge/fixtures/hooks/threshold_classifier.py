#!/usr/bin/env python3
"""Reference decision hook: the same threshold rule as the builtin
classifier, spoken over the line-delimited JSON hook contract.

Reads one query per line from stdin:
    {"t": int, "j": int, "s": number, "N": number, "h": number}
and answers one line per query on stdout:
    {"decision": "wanted"} or {"decision": "other"}
"""
import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    query = json.loads(line)
    decision = "wanted" if query["s"] + query["N"] >= query["h"] else "other"
    print(json.dumps({"decision": decision}), flush=True)
