#!/usr/bin/env python3
import os
import sys


def run():
    from django.core.management import execute_from_command_line
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tabkey.settings')
    argv = list(sys.argv)
    # `expand-claims` and `expand_claims` name the same command
    if len(argv) > 1 and not argv[1].startswith('-'):
        argv[1] = argv[1].replace('-', '_')
    execute_from_command_line(argv)


if __name__ == '__main__':
    run()
