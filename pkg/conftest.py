import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'fppsca.settings')
django.setup()
