import sys

from qdaphase.cli import main

if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nCtrl+C detected, shutting down.", file=sys.stderr)
        sys.exit(130)
