"""icdb URL Configuration

Only the REST API is served; everything else runs as management commands.
"""
from django.contrib import admin
from django.urls import include, path, re_path
from rest_framework.authtoken import views as auth_token_views

urlpatterns = [
    path('admin/', admin.site.urls),
    re_path(r'^api/(?P<version>(v1))/auth/', include('rest_framework.urls')),
    re_path(r'^api/(?P<version>(v1))/auth-token/', auth_token_views.obtain_auth_token),
    re_path(r'^api/(?P<version>(v1))/rewrite/', include('rewrite.urls.api')),
    re_path(r'^api/(?P<version>(v1))/bench-results/', include('bench.urls.api')),
]
