"""Configure Django settings so pytest can run the SimpleTestCase suite."""

import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'conformal_lab.settings')
django.setup()
