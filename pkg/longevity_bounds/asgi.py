"""
ASGI entry point for the longevity_bounds project; serves the admin and the
read-only scenario history API.
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'longevity_bounds.settings')

application = get_asgi_application()
