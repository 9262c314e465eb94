from django.core.management.base import BaseCommand, CommandError

from bergman.cli import run


class Command(BaseCommand):
    help = 'Run a toolkit subcommand (domains, gram, basis, bieberbach, error-curve, ...)'

    def add_arguments(self, parser):
        parser.add_argument('args', nargs='*', help='subcommand and its flags')

    def run_from_argv(self, argv):
        # argv is [manage.py, bieberbach, <subcommand>, ...]; flags belong to the toolkit parser
        status = run(argv[2:])
        if status:
            raise SystemExit(status)

    def handle(self, *args, **options):
        status = run(list(args))
        if status:
            raise CommandError(f'bieberbach exited with status {status}', returncode=status)
