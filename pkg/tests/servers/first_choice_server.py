"""Confidently predicts the first choice (0.99), however wrong."""

import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    n = len(req["graph"]["choices"])
    policy = [0.01 / (n - 1)] * n if n > 1 else [1.0]
    if n > 1:
        policy[0] = 0.99
    print(json.dumps({"id": req["id"], "policy": policy, "value": None}), flush=True)
