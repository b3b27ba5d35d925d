from __future__ import annotations  # Should be the very first line

from dotenv import load_dotenv

load_dotenv()  # Load environment variables from .env file at the very beginning

import sys

from handlers.cli import cli


def main() -> None:
    """Process entry point; the exit code comes from the CLI."""
    try:
        code = cli(sys.argv[1:])
    except KeyboardInterrupt:
        code = 2
    sys.exit(code)


if __name__ == "__main__":
    main()
