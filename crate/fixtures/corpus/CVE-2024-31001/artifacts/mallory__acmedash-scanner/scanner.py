"""Version scanner for AcmeDash instances.

Does not exploit anything; it only reports the advertised version string
so an operator can decide whether CVE-2024-31001 applies.
"""

import sys

import requests


def main() -> None:
    base = sys.argv[1]
    resp = requests.get(f"{base}/api/version", timeout=5)
    print(resp.json().get("version", "unknown"))


if __name__ == "__main__":
    main()
