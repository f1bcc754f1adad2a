"""Replies with garbage that is not JSON."""

import sys

for _line in sys.stdin:
    print("this is not json", flush=True)
