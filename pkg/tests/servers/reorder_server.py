"""Answers the first request by sending the response for request id+1
first, then id — exercising the client's out-of-order parking."""

import json
import sys

sent_ahead = False
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    n = len(req["graph"]["choices"])
    policy = [1.0 / n] * n
    if not sent_ahead:
        sent_ahead = True
        print(json.dumps({"id": req["id"] + 1, "policy": policy, "value": 0.25}))
        print(json.dumps({"id": req["id"], "policy": policy, "value": 0.75}), flush=True)
    # later requests: their response was already sent ahead of time
