"""
URL configuration for longevity_bounds project.

The engine itself is driven from management commands; the API only exposes
the stored scenario run history.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/scenarios/', include('scenarios.urls')),
]
