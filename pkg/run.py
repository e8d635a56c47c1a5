#!/usr/bin/env python3
"""Entry point for the flimks tool server."""
from flimks.server import run_mcp_server

if __name__ == "__main__":
    run_mcp_server()
