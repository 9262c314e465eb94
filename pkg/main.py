#!/usr/bin/env python3
"""Console entry point for the ``bieberbach`` script."""

import os
import sys


def main():
    """Configure Django settings and run one toolkit command."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'conformal_lab.settings')
    import django

    django.setup()
    from bergman.cli import run

    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
