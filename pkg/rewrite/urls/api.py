from django.urls import path

from rewrite.views.api import APIRewrite


urlpatterns = [
    path('', APIRewrite.as_view(), name='api-rewrite'),
]
