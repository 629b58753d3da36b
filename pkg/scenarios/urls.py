from django.urls import path, include
from rest_framework.routers import DefaultRouter

from .views import ScenarioRunViewSet

router = DefaultRouter()
router.register(r'runs', ScenarioRunViewSet, basename='scenario-run')

app_name = 'scenarios'

urlpatterns = [
    path('', include(router.urls)),
]
