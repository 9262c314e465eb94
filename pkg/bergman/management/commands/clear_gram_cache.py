from django.core.management.base import BaseCommand

from bergman.cache import GramCache


class Command(BaseCommand):
    help = 'Delete every cached Gram matrix'

    def add_arguments(self, parser):
        parser.add_argument(
            '--confirm',
            action='store_true',
            help='Skip confirmation prompt',
        )
        parser.add_argument(
            '--cache-dir',
            help='Cache directory (defaults to the BERGMAN CACHE_DIR setting)',
        )

    def handle(self, *args, **options):
        cache = GramCache(options.get('cache_dir'))
        entries = sorted(cache.directory.glob('gram-*.bin')) if cache.directory.exists() else []

        if not entries:
            self.stdout.write(
                self.style.SUCCESS(f'No cached Gram matrices in {cache.directory}.')
            )
            return

        if not options['confirm']:
            confirm = input(
                f'Are you sure you want to delete {len(entries)} cached Gram matrices? (yes/no): '
            )
            if confirm.lower() != 'yes':
                self.stdout.write(
                    self.style.WARNING('Operation cancelled.')
                )
                return

        removed = cache.clear()

        self.stdout.write(
            self.style.SUCCESS(
                f'Successfully deleted {removed} cached Gram matrices.'
            )
        )
