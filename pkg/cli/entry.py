# cli/entry.py
import sys

from django.core.management import ManagementUtility


def run(argv=None):
    """Execute ``convseq <subcommand> [flags]`` and return the process exit code.

    Command errors print a diagnostic on stderr and give 1; argument errors
    give 2.
    """
    argv = list(sys.argv if argv is None else argv)
    try:
        ManagementUtility(argv).execute()
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
