from rest_framework import generics
from rest_framework.permissions import IsAuthenticated

from bench.models import BenchResult
from bench.serializers import BenchResultSerializer


class APIBenchResultList(generics.ListAPIView):
    """Stored benchmark results, optionally filtered by dataset, scheme, model and metric
    """
    permission_classes = (IsAuthenticated,)
    serializer_class = BenchResultSerializer

    def get_queryset(self):
        queryset = BenchResult.objects.all()
        for name in ('dataset', 'scheme', 'model', 'metric'):
            value = self.request.query_params.get(name)
            if value is not None:
                queryset = queryset.filter(**{name: value})
        return queryset
