import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'petzlab.settings')
django.setup()
