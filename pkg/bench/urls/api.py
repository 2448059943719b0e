from django.urls import path

from bench.views.api import APIBenchResultList

urlpatterns = [
    path('', APIBenchResultList.as_view(), name='api-bench-results'),
]
