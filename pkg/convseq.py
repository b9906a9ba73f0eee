#!/usr/bin/env python
"""convseq command-line utility: generate, fit, null, score, roc, sort, bench."""
import os
import sys


def main():
    """Run a convseq subcommand."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'convseq_project.settings')
    try:
        from cli.entry import run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    sys.exit(run(sys.argv))


if __name__ == '__main__':
    main()
