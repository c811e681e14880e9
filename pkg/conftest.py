import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gendice.settings")
django.setup()
