"""Wire-protocol loopback oracle: uniform policy, value 0.5."""

import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    n = len(req["graph"]["choices"])
    print(
        json.dumps({"id": req["id"], "policy": [1.0 / n] * n, "value": 0.5}),
        flush=True,
    )
