from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import filters
from rest_framework.permissions import AllowAny
from rest_framework.viewsets import ReadOnlyModelViewSet

from .models import ScenarioRun
from .serializers import ScenarioRunSerializer


class ScenarioRunViewSet(ReadOnlyModelViewSet):
    """
    Read-only history of scenario runs. Runs are only created by the
    ``run`` management command.
    """
    queryset = ScenarioRun.objects.all()
    serializer_class = ScenarioRunSerializer
    permission_classes = [AllowAny]
    filter_backends = [DjangoFilterBackend, filters.SearchFilter, filters.OrderingFilter]
    filterset_fields = ['status', 'name', 'seed']
    search_fields = ['name', 'config_path']
    ordering_fields = ['created_at', 'n_sims', 'name']
    ordering = ['-created_at']
