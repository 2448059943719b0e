from rest_framework import serializers

from bench.models import BenchResult


class BenchResultSerializer(serializers.ModelSerializer):
    cv = serializers.FloatField(read_only=True)

    class Meta:
        model = BenchResult
        fields = ('id', 'dataset', 'scheme', 'model', 'metric', 'query', 'iterations', 'mean', 'std', 'cv', 'created')
        read_only_fields = fields
