#!/usr/bin/env python3
"""Degenerate decision hook that classifies every signal as wanted,
regardless of the evidence. Useful for exercising the hook contract and
for demonstrating what a broken classifier does to the score."""
import json
import sys

for line in sys.stdin:
    if line.strip():
        print(json.dumps({"decision": "wanted"}), flush=True)
