from django.db import models


class BenchResult(models.Model):
    """One averaged measurement of a benchmark run

    Plain database baselines carry no scheme and the model `db`.
    """
    SCHEME_CHOICES = (
        ('', 'None'),
        ('rsa', 'RSA signature'),
        ('pbkdf2', 'PBKDF2 MAC'),
        ('aes', 'AES cipher'),
    )
    MODEL_CHOICES = (
        ('db', 'Plain database'),
        ('ocf', 'One code per field'),
        ('oct', 'One code per tuple'),
    )
    METRIC_CHOICES = (
        ('db_size_bytes', 'Database size (bytes)'),
        ('icdb_size_bytes', 'ICDB size (bytes)'),
        ('size_ratio', 'ICDB / database size'),
        ('convert_seconds', 'Conversion time (s)'),
        ('rewrite_ms', 'Query rewrite (ms)'),
        ('exec_ms', 'Execution and fetch (ms)'),
        ('verify_ms', 'Verification (ms)'),
        ('ratio_vs_baseline', 'ICDB / database execution time'),
        ('delete_verify_ms', 'DELETE verification (ms)'),
        ('delete_execute_ms', 'DELETE execution (ms)'),
        ('delete_revoke_ms', 'DELETE revocation (ms)'),
        ('insert_convert_ms', 'INSERT conversion (ms)'),
        ('insert_execute_ms', 'INSERT execution (ms)'),
    )
    dataset = models.CharField(max_length=100, verbose_name='Dataset')
    scheme = models.CharField(max_length=10, blank=True, choices=SCHEME_CHOICES, verbose_name='Scheme')
    model = models.CharField(max_length=3, choices=MODEL_CHOICES, verbose_name='Model')
    metric = models.CharField(max_length=32, choices=METRIC_CHOICES, verbose_name='Metric')
    query = models.TextField(blank=True, verbose_name='Query')
    iterations = models.PositiveIntegerField(default=1, verbose_name='Iterations')
    mean = models.FloatField(verbose_name='Mean')
    std = models.FloatField(default=0.0, verbose_name='Standard deviation')
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ('-created', 'dataset', 'scheme', 'model', 'metric')

    def __str__(self):
        return '{} {}-{} {}'.format(self.dataset, self.scheme or '-', self.model, self.metric)

    @property
    def cv(self):
        """Coefficient of variation, 0 for a zero mean
        """
        return self.std / self.mean if self.mean else 0.0
