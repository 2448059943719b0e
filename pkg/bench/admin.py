from django.contrib import admin

from bench.models import BenchResult


class BenchResultAdmin(admin.ModelAdmin):
    list_display = ('dataset', 'scheme', 'model', 'metric', 'mean', 'std', 'iterations', 'created')
    list_filter = ('dataset', 'scheme', 'model', 'metric')
    search_fields = ('dataset', 'query')
    readonly_fields = ('created',)


admin.site.register(BenchResult, BenchResultAdmin)
